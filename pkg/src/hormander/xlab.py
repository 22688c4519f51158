"""The oscillating counterexample: slowly varying, RO-varying, yet not an
interpolation parameter.

``phi(t) = t**h(t) + log t`` for ``t >= 3`` (``phi = 1`` below) with
``h(t) = (log t)**-0.5 sin((log t)**0.25)``. Along

    log t_k = (2 pi k + pi/2)**4,   log s_k = (2 pi k + pi)**4

the sine equals 1 and 0 respectively, so ``phi(t_k)/phi(s_k)`` explodes even
though ``t_k < s_k``. Everything here runs in ``x = log t``; ``t_1`` alone is
about ``exp(3803)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as _expr
from .errors import InvalidInput, NumericalFailure
from .grid import embedding_scan
from .param import log_grid, matuszewska_indices, pseudoconcavity_test, psi_from_phi
from .spectral import rank_one_witness

APPENDIX = _expr.AppendixParam()
LOG3 = math.log(3.0)


def appendix_log_phi(x):
    """``log phi(e^x)``; ``x`` must be non-negative."""
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidInput("oscillating parameter is defined for log t >= 0 only")
    return _expr.appendix_log_phi(x)


@dataclass(frozen=True)
class SequencePair:
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidInput(f"k must be a positive integer, got {self.k!r}")

    @property
    def peak_root(self):
        return 2 * math.pi * self.k + math.pi / 2

    @property
    def trough_root(self):
        return 2 * math.pi * self.k + math.pi

    @property
    def log_t(self):
        return self.peak_root ** 4

    @property
    def log_s(self):
        return self.trough_root ** 4


def ratio_log_lower_bound(k: int) -> float:
    """``(2 pi k + pi/2)^2 - log(1 + (2 pi k + pi)^4)``, a lower bound for ``log phi(t_k)/phi(s_k)``.

    The bound is cross-checked against the direct log-domain evaluation.
    """
    p = SequencePair(k)
    bound = p.peak_root ** 2 - math.log1p(p.trough_root ** 4)
    direct = appendix_log_phi(p.log_t) - appendix_log_phi(p.log_s)
    if direct < bound - 1e-9:
        raise NumericalFailure(f"direct log ratio {direct!r} fell below the bound {bound!r} at k={k}")
    return bound


@dataclass
class SlowVariationProfile:
    x: np.ndarray
    lambdas: np.ndarray
    deviations: np.ndarray  # shape (len(x), len(lambdas))

    @property
    def max_deviation(self):
        return self.deviations.max(axis=1)

    def rows(self):
        for i, xv in enumerate(self.x):
            for j, lam in enumerate(self.lambdas):
                yield float(xv), float(lam), float(self.deviations[i, j])


def slow_variation_profile(lambda_set, x_list) -> SlowVariationProfile:
    """``|phi(lam t)/phi(t) - 1|`` on a grid of ``x = log t`` and ``lam`` in ``[1, 2]``."""
    lam = np.atleast_1d(np.asarray(lambda_set, dtype=float))
    x = np.atleast_1d(np.asarray(x_list, dtype=float))
    if lam.size == 0 or x.size == 0:
        raise InvalidInput("need at least one lambda and one x")
    if np.any(lam < 1) or np.any(lam > 2):
        raise InvalidInput("lambda values must lie in [1, 2]")
    if np.any(x < LOG3):
        raise InvalidInput("x values must be at least log 3")
    base = appendix_log_phi(x)[:, None]
    shifted = appendix_log_phi(x[:, None] + np.log(lam)[None, :])
    return SlowVariationProfile(x, lam, np.abs(np.expm1(shifted - base)))


@dataclass
class WitnessRow:
    k: int
    bound: float
    witness: float


def non_interpolation_demo(k_max: int) -> list[WitnessRow]:
    """Rank-one witnesses ``e_{s_k} -> e_{t_k}`` on the couple of orders ``(0, 1)``.

    With ``s0 = 0, s1 = 1`` the derived ``psi`` coincides with ``phi``; each
    row holds the closed-form lower bound and the witness log-ratio.
    """
    if int(k_max) != k_max or k_max < 1:
        raise InvalidInput("k_max must be a positive integer")
    psi = psi_from_phi(APPENDIX, 0.0, 1.0)
    rows = []
    for k in range(1, int(k_max) + 1):
        p = SequencePair(k)
        rows.append(WitnessRow(k, ratio_log_lower_bound(k),
                               rank_one_witness(psi, p.log_s, p.log_t)))
    return rows


def sequence_log_points(k_max=5):
    return np.array([v for k in range(1, k_max + 1)
                     for v in (SequencePair(k).log_t, SequencePair(k).log_s)])


@dataclass
class PositiveCheck:
    eps: float
    sigma0: float
    sigma1: float
    log_c_best: float
    passes: bool

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def interpolation_positive_check(eps=0.5, *, log_t_max=1e4, cap=1e6) -> PositiveCheck:
    """Interpolation property for the couple of orders ``(-eps, 1)``.

    Both indices are ``0``, strictly inside ``(-eps, 1)``, so the shifted
    ``psi`` must be pseudoconcave on ``[1, inf)``; that is what gets tested.
    """
    if not eps > 0:
        raise InvalidInput("eps must be positive")
    est = matuszewska_indices(APPENDIX, log_t_max=log_t_max, log_t_min=LOG3)
    psi = psi_from_phi(APPENDIX, -eps, 1.0)
    rep = pseudoconcavity_test(psi, r=1.0, log_t_max=(1 + eps) * log_t_max, cap=cap)
    ok = -eps < est.sigma0 and est.sigma1 < 1.0 and rep.passes
    return PositiveCheck(float(eps), est.sigma0, est.sigma1, rep.log_c_best, bool(ok))


@dataclass
class InvariantResult:
    name: str
    ok: bool
    detail: str


def verify_invariants(k_max=5) -> list[InvariantResult]:
    """Run every counterexample invariant; nothing raises, failures are reported."""
    out = []

    def check(name, fn):
        try:
            ok, detail = fn()
        except Exception as exc:  # reported, not raised
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(InvariantResult(name, bool(ok), detail))

    def bounds():
        b = [ratio_log_lower_bound(k) for k in range(1, max(k_max, 10) + 1)]
        return all(q > p for p, q in zip(b, b[1:])), f"bound(1)={b[0]:.6f}"

    def witnesses():
        rows = non_interpolation_demo(k_max)
        above = all(r.witness >= r.bound - 1e-9 for r in rows)
        inc = all(q.witness > p.witness for p, q in zip(rows, rows[1:]))
        return above and inc, f"witness(1)={rows[0].witness:.6f}, witness({k_max})={rows[-1].witness:.6f}"

    def indices():
        est = matuszewska_indices(APPENDIX, log_t_max=1e4, log_t_min=LOG3)
        ok = abs(est.sigma0) <= 0.1 and abs(est.sigma1) <= 0.1
        return ok, f"sigma0={est.sigma0:.6f}, sigma1={est.sigma1:.6f}"

    def not_pseudoconcave():
        pts = np.concatenate([log_grid(0.0, 50.0), sequence_log_points(k_max)])
        logs = [pseudoconcavity_test(APPENDIX, r=r, log_points=pts).log_c_best
                for r in (1.0, 10.0, 1e3)]
        return min(logs) >= 52.0, "log c_best=" + ", ".join(f"{v:.4f}" for v in logs)

    def embedding():
        reps = [embedding_scan(APPENDIX, 0.0, 1.0, log_t_max=lt) for lt in (10.0, 1e2, 1e4, 1e6)]
        ok = all(r.within_cap and math.isfinite(r.c0) and math.isfinite(r.c1) and r.c0 > 0
                 for r in reps)
        return ok, "c0, c1=" + "; ".join(f"{r.c0:.6g}, {r.c1:.6g}" for r in reps)

    def psi_equals_phi():
        x = np.concatenate([np.linspace(0.0, 50.0, 501), sequence_log_points(k_max)])
        same = np.array_equal(psi_from_phi(APPENDIX, 0.0, 1.0).log_eval(x), appendix_log_phi(x))
        return same, "exact" if same else "mismatch"

    def slow_variation():
        prof = slow_variation_profile([1.25, 1.5, 2.0], [1e2, 1e3, 1e4, 1e5])
        m = prof.max_deviation
        return bool(np.all(np.diff(m) < 0)), "max deviation=" + ", ".join(f"{v:.4g}" for v in m)

    def positive():
        rep = interpolation_positive_check()
        return rep.passes, (f"sigma=({rep.sigma0:.4f}, {rep.sigma1:.4f}), "
                            f"log c_best={rep.log_c_best:.4f}")

    check("bound_monotone", bounds)
    check("witness_above_bound_and_increasing", witnesses)
    check("indices_zero", indices)
    check("not_pseudoconcave", not_pseudoconcave)
    check("embedding_constants_finite", embedding)
    check("psi_equals_phi", psi_equals_phi)
    check("slow_variation_decreasing", slow_variation)
    check("interpolation_positive_shifted", positive)
    return out
