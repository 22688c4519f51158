"""Acceptance suite: nine criteria at their stated tolerances.

Each criterion prints one ``PASS``/``FAIL`` line; pytest also repeats them in
the terminal summary. Run standalone with ``python3 tests/test_acceptance.py``.
"""
import functools
import math
import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ORDER_PAIRS, corpus  # noqa: E402

from hormander import expr as E  # noqa: E402
from hormander import xlab  # noqa: E402
from hormander.grid import (DomainMask, GridDistribution, embedding_scan, hormander_norm,  # noqa: E402
                            l2_box_norm, quotient_norm)
from hormander.param import (build_from_representation, log_grid, matuszewska_indices,  # noqa: E402
                             phi_from_psi, power_bound_log_constant, pseudoconcavity_test,
                             psi_from_phi, ro_membership)
from hormander.spectral import (DenseMap, DiagonalCouple, RankOneMap, interpolation_bound_check,  # noqa: E402
                                norm_identity_check, operator_norms, reiteration_norm_check)

RESULTS: list[str] = []
L = E.LogShift()


def criterion(number, title):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*a, **kw):
            try:
                detail = fn(*a, **kw)
            except BaseException as exc:
                line = f"[{number}] FAIL {title}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
                RESULTS.append(line)
                print(line)
                raise
            line = f"[{number}] PASS {title}" + (f" ({detail})" if detail else "")
            RESULTS.append(line)
            print(line)
        return run
    return wrap


# 1 ------------------------------------------------------------------------------

@criterion(1, "round trip phi -> psi -> phi, relative 1e-12")
def test_round_trip_identity():
    params = corpus()
    assert len(params) >= 10
    x = np.linspace(0.0, math.log(1e8), 1000)
    worst = 0.0
    for phi in params.values():
        y = phi.log_eval(x)
        for s0, s1 in ORDER_PAIRS:
            back = phi_from_psi(psi_from_phi(phi, s0, s1), s0, s1).log_eval(x)
            worst = max(worst, float(np.max(np.abs(np.expm1(back - y)))))
    assert worst <= 1e-12, worst
    return f"{len(params)} parameters x {len(ORDER_PAIRS)} order pairs, worst {worst:.1e}"


# 2 ------------------------------------------------------------------------------

def _psi_corpus():
    psis = {"tau^0.3": E.Power(0.3), "1+log tau": L, "tau^0.5/(1+log tau)": E.Power(0.5) * L ** -1.0,
            "tau^0.5+2": E.Sum((E.Power(0.5), E.Constant(2.0))), "tau^1.5": E.Power(1.5),
            "(1+tau^2)^0.25": E.PowerOf(E.Sum((E.Power(2.0), E.Constant(1.0))), 0.25)}
    for name, phi in corpus().items():
        psis[f"psi[{name}]"] = psi_from_phi(phi, -1.0, 3.0)
    return psis


@criterion(2, "pseudoconcavity of psi <-> power bounds of phi with the same constant, 1e-9")
def test_peetre_equivalence():
    checked = passing = 0
    worst = 0.0
    for psi in _psi_corpus().values():
        for s0, s1 in ORDER_PAIRS:
            d = s1 - s0
            X = log_grid(0.0, math.log(1e8))[1:]
            pc = pseudoconcavity_test(psi, r=1.0, log_points=d * X)
            phi = phi_from_psi(psi, s0, s1)
            log_c, _, _ = power_bound_log_constant(X, phi.log_eval(X), s0, s1)
            # forward: psi passes with c  =>  phi satisfies the bound with c
            # backward: phi satisfies the bound with c  =>  psi passes with c
            worst = max(worst, abs(pc.log_c_best - log_c))
            checked += 1
            passing += pc.passes
            assert pc.passes == (log_c <= math.log(pc.cap))
    assert worst <= 1e-9, worst
    return f"{checked} (psi, s0, s1) cases, {passing} pseudoconcave, worst log gap {worst:.1e}"


# 3 ------------------------------------------------------------------------------

@criterion(3, "interpolation norm equals the H^phi grid norm, 1e-12")
def test_norm_identity():
    rng = np.random.default_rng(2024)
    params = [(E.Power(0.5) * L, 0.0, 1.0), (E.Power(1.0), 0.0, 2.0),
              (E.AppendixParam(), 0.0, 1.0), (corpus()["rep oscillating"], -1.0, 2.0)]
    worst = 0.0
    count = 0
    for shape, box in (((64,), 2 * np.pi), ((4096,), 100.0), ((64, 64), (2 * np.pi, 10.0))):
        for _ in range(5):
            u = GridDistribution(rng.standard_normal(shape) + 1j * rng.standard_normal(shape), box)
            for phi, s0, s1 in params:
                worst = max(worst, norm_identity_check(u, phi, s0, s1))
                count += 1
    assert worst <= 1e-12, worst
    return f"{count} checks, worst {worst:.1e}"


# 4 ------------------------------------------------------------------------------

@criterion(4, "reiteration identity on N = 1024 couples, 1e-12")
def test_reiteration():
    rng = np.random.default_rng(7)
    triples = [(E.Power(0.5), E.Power(2.0) * L, E.Power(1 / 3)),
               (E.Constant(1.0), E.Power(1.0), L),
               (E.Power(-0.5) * L, E.Power(1.5), E.PowerOf(E.Sum((E.Power(2.0), E.Constant(1.0))), 0.25))]
    worst = 0.0
    for f, g, psi in triples:
        for _ in range(3):
            c = DiagonalCouple(rng.uniform(-3, 3, 1024), rng.uniform(0, 25, 1024), 1.0)
            u = rng.standard_normal(1024) + 1j * rng.standard_normal(1024)
            worst = max(worst, reiteration_norm_check(c, f, g, psi, u))
    assert worst <= 1e-12, worst
    return f"worst {worst:.1e}"


# 5 ------------------------------------------------------------------------------

def _svd_norm(A, d):
    # largest singular value of D A D^-1
    return float(scipy.linalg.svdvals(d[:, None] * A / d[None, :])[0])


def _concave_non_power():
    one_plus_sq = E.Sum((E.Power(2.0), E.Constant(1.0)))
    return {"(1+tau^2)^(1/4)": E.PowerOf(one_plus_sq, 0.25),
            "(1+log(1+tau^2))^(1/2)": E.PowerOf(E.Compose(L, one_plus_sq), 0.5),
            "1+log tau": L}


@criterion(5, "interpolation bound for dense maps (powers <= 1+1e-9, concave <= c_best)")
def test_interpolation_bound():
    rng = np.random.default_rng(11)
    n = 32
    worst_power = 0.0
    for theta in (0.25, 0.5, 0.75):
        psi = E.Power(theta)
        for _ in range(100):
            c = DiagonalCouple(rng.uniform(-2, 2, n), rng.uniform(0, 8, n), 1.0)
            A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            worst_power = max(worst_power, interpolation_bound_check(DenseMap(A), c, psi))
    assert worst_power <= 1 + 1e-9, worst_power

    worst_rel = 0.0
    oracle_gap = 0.0
    for psi in _concave_non_power().values():
        for _ in range(100):
            c = DiagonalCouple(rng.uniform(-2, 2, n), rng.uniform(0, 8, n), 1.0)
            c_best = pseudoconcavity_test(psi, r=0.0, log_points=c.log_spectrum).c_best
            A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            norms = operator_norms(DenseMap(A), c, psi)
            w = c.base_weights
            for got, d in ((norms.n0, w), (norms.n1, w * c.spectrum),
                           (norms.npsi, w * psi.eval(c.spectrum))):
                oracle_gap = max(oracle_gap, abs(got / _svd_norm(A, d) - 1))
            ratio = norms.npsi / max(norms.n0, norms.n1)
            worst_rel = max(worst_rel, ratio / c_best)
            # rank-one maps between every pair of spectral points are the extremal case
            for i in range(0, n, 4):
                for j in range(n):
                    r1 = interpolation_bound_check(RankOneMap(i, j, 1.0, n), c, psi)
                    worst_rel = max(worst_rel, r1 / c_best)
    assert oracle_gap <= 1e-9, oracle_gap
    assert worst_rel <= 1 + 1e-9, worst_rel
    return (f"power worst {worst_power:.3g}; concave worst ratio/c_best {worst_rel:.6g}; "
            f"oracle gap {oracle_gap:.1e}")


# 6 ------------------------------------------------------------------------------

@criterion(6, "counterexample reproduction")
def test_counterexample():
    b1 = xlab.ratio_log_lower_bound(1)
    assert abs(b1 - 52.71) <= 0.01, b1
    rows = xlab.non_interpolation_demo(5)
    assert all(r.witness >= r.bound for r in rows)
    assert all(q.witness > p.witness for p, q in zip(rows, rows[1:]))
    est = matuszewska_indices(E.AppendixParam(), log_t_max=1e4, log_t_min=math.log(3))
    assert abs(est.sigma0) <= 0.1 and abs(est.sigma1) <= 0.1, est
    p1 = xlab.SequencePair(1)
    grids = [np.array([p1.log_t, p1.log_s]),
             np.concatenate([log_grid(0.0, 1e4), [p1.log_t, p1.log_s]]),
             np.concatenate([np.linspace(1.0, 5000.0, 777), xlab.sequence_log_points(5)])]
    for pts in grids:
        for r in (1.0, 10.0, 1e3):
            assert pseudoconcavity_test(E.AppendixParam(), r=r, log_points=pts).log_c_best >= 52.0
    for lt in (10.0, 1e3, 1e4, 1e6):
        rep = embedding_scan(E.AppendixParam(), 0.0, 1.0, log_t_max=lt)
        assert rep.within_cap and rep.c0 > 0 and math.isfinite(rep.c1), rep
    return (f"bound(1) = {b1:.4f}, witnesses {[round(r.witness, 3) for r in rows]}, "
            f"indices ({est.sigma0:.4f}, {est.sigma1:.4f})")


# 7 ------------------------------------------------------------------------------

@criterion(7, "quotient norm: contraction, full mask, trivial weight")
def test_quotient():
    rng = np.random.default_rng(5)
    N, box = 256, 2 * np.pi
    worst_slack = 0.0
    for _ in range(200):
        u = GridDistribution(rng.standard_normal(N) + 1j * rng.standard_normal(N), box)
        m = rng.random(N) < rng.uniform(0.05, 0.95)
        m[rng.integers(N)] = True
        phi = [E.Power(rng.uniform(0, 2)), E.Power(rng.uniform(0, 1.5)) * L, L ** rng.uniform(-1, 2)][
            rng.integers(3)]
        q = quotient_norm(u, DomainMask(m, box), phi)
        h = hormander_norm(u, phi)
        worst_slack = max(worst_slack, (q - h) / h)
    assert worst_slack <= 1e-10, worst_slack

    full_gap = trivial_gap = 0.0
    for _ in range(10):
        u = GridDistribution(rng.standard_normal(N), box)
        phi = E.Power(rng.uniform(0, 2)) * L
        full = quotient_norm(u, DomainMask(np.ones(N, bool), box), phi)
        full_gap = max(full_gap, abs(full / hormander_norm(u, phi) - 1))
        m = rng.random(N) < 0.5
        m[0] = True
        q1 = quotient_norm(u, DomainMask(m, box), E.Constant(1.0))
        closed = math.sqrt(u.cell_volume * math.fsum(np.abs(u.samples[m]) ** 2))
        trivial_gap = max(trivial_gap, abs(q1 / closed - 1))
    assert full_gap <= 1e-10, full_gap
    assert trivial_gap <= 1e-12, trivial_gap
    return f"max slack {worst_slack:.1e}, full-mask gap {full_gap:.1e}, trivial gap {trivial_gap:.1e}"


# 8 ------------------------------------------------------------------------------

@criterion(8, "Parseval pin in 1, 2 and 3 dimensions, 1e-12")
def test_parseval():
    rng = np.random.default_rng(8)
    worst = 0.0
    for shape in ((128,), (32, 16), (8, 16, 8)):
        for _ in range(20):
            box = rng.uniform(0.5, 20.0, len(shape))
            u = GridDistribution(rng.standard_normal(shape) + 1j * rng.standard_normal(shape), box)
            worst = max(worst, abs(hormander_norm(u, E.Constant(1.0)) / l2_box_norm(u) - 1))
    assert worst <= 1e-12, worst
    return f"worst {worst:.1e}"


# 9 ------------------------------------------------------------------------------

@criterion(9, "representation-built parameters are RO with exponents inside eps range +- 0.1")
def test_representation():
    rng = np.random.default_rng(9)
    t = np.exp(np.linspace(0.0, math.log(1e8), 2001))
    lt = np.log(t)
    worst = 0.0
    for _ in range(50):
        a, b, p = rng.uniform(0, 0.05), rng.uniform(0, 1), rng.uniform(0, 2 * np.pi)
        e0, e1, c, q = rng.uniform(-2, 3), rng.uniform(0, 0.5), rng.uniform(0, 1), rng.uniform(0, 2 * np.pi)
        beta = a * np.sin(b * lt + p)
        eps = e0 + e1 * np.sin(c * lt + q)
        rep = ro_membership(build_from_representation(beta, eps, t))
        assert rep.is_member, rep
        lo, hi = eps.min() - rep.s0, rep.s1 - eps.max()
        worst = max(worst, lo, hi)
        assert rep.s0 >= eps.min() - 0.1 and rep.s1 <= eps.max() + 0.1, (rep.s0, rep.s1, eps.min(), eps.max())
    return f"50 pairs, largest excursion beyond the eps range {max(worst, 0.0):.3g}"


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    failed = 0
    for fn in sorted(tests, key=lambda f: f.__code__.co_firstlineno):
        try:
            fn()
        except Exception:
            failed += 1
    sys.exit(1 if failed else 0)
