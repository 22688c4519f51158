"""Analysis of function parameters: RO membership, indices, transforms.

All scans work on geometric grids, i.e. uniform grids in ``x = log t``, and
compare values of ``y = log phi``. Pairwise maxima of the form
``max_{i <= j} g[j] - g[i]`` are computed in one pass with a running minimum,
so the constant of a two-sided power bound costs O(n) per exponent pair.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EvaluationError, InvalidInput, PreconditionError
from .expr import (
    ConcaveMajorant, ParamExpr, PhiFromPsi, PsiFromPhi, Reiteration, Representation,
)

LN10 = math.log(10.0)
DEFAULT_DENSITY = 64
DEFAULT_CAP = 1e6
MAX_SAMPLES = 4096


def _exp_or_inf(v):
    return math.exp(v) if v < 709.0 else math.inf


def log_grid(x_lo, x_hi, density=DEFAULT_DENSITY, samples=None, max_samples=MAX_SAMPLES):
    """Uniform grid in ``log t`` with ``density`` points per decade of ``t``.

    The point count is capped at ``max_samples`` unless ``samples`` is given.
    """
    if not (math.isfinite(x_lo) and math.isfinite(x_hi)) or x_hi <= x_lo:
        raise InvalidInput(f"empty log range [{x_lo}, {x_hi}]")
    if samples is None:
        if density < 8:
            raise InvalidInput("density must be at least 8 points per decade")
        samples = int(math.ceil(density * (x_hi - x_lo) / LN10)) + 1
        samples = min(max(samples, 2), max_samples)
    return np.linspace(x_lo, x_hi, int(samples))


def _upper_log(t_max, log_t_max):
    if log_t_max is not None:
        return float(log_t_max)
    if t_max is None or not t_max > 1:
        raise InvalidInput(f"t_max must exceed 1, got {t_max!r}")
    return math.log(t_max)


def log_values(expr: ParamExpr, x) -> np.ndarray:
    """``expr.log_eval(x)``, raising :class:`EvaluationError` on any non-finite value."""
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        y = np.asarray(expr.log_eval(x), dtype=float)
    bad = ~np.isfinite(y)
    if bad.any():
        where = float(x[bad].flat[0]) if x.ndim else float(x)
        raise EvaluationError(f"parameter is not finite and positive at log t = {where!r}")
    return y


def max_rise(g):
    """``max_{i <= j} g[j] - g[i]`` and the maximizing ``(i, j)``."""
    g = np.asarray(g, dtype=float)
    runmin = np.minimum.accumulate(g)
    idx = np.arange(g.size)
    argmin = np.maximum.accumulate(np.where(g <= runmin, idx, 0))
    rise = g - runmin
    j = int(np.argmax(rise))
    return float(rise[j]), int(argmin[j]), j


def power_bound_log_constant(x, y, s0, s1):
    """Smallest ``log c >= 0`` with ``-log c + s0 L <= y_j - y_i <= log c + s1 L``.

    Here ``L = x_j - x_i`` ranges over all sampled pairs ``i <= j``. Returns
    ``(log_c, lower, upper)`` where ``lower``/``upper`` are the individual
    one-sided requirements as ``(value, i, j)``.
    """
    lower = max_rise(s0 * x - y)
    upper = max_rise(y - s1 * x)
    return max(0.0, lower[0], upper[0]), lower, upper


@dataclass
class IndexEstimate:
    sigma0: float
    sigma1: float
    bracket: float
    log_t_range: tuple
    samples: int
    lambda_min: float
    tail: float

    def to_dict(self):
        return asdict(self)


@dataclass
class ROReport:
    """Certificate ``(s0, s1, c)`` of a two-sided power bound, or a counterwitness.

    ``witness`` is ``(log t, log lambda)`` for the pair violating the bound at
    the widest exponents tried; everything is kept in log form because the
    sampled ``t`` may be far outside floating range.
    """

    is_member: bool
    s0: float
    s1: float
    log_c: float
    witness: tuple | None
    grid_spec: dict
    indices: IndexEstimate
    attained_lower: bool
    attained_upper: bool
    cap: float

    @property
    def c(self):
        return _exp_or_inf(self.log_c)

    def to_dict(self):
        d = asdict(self)
        d["c"] = self.c if math.isfinite(self.c) else None
        return d


@dataclass
class PseudoconcavityReport:
    r: float
    log_c_best: float
    worst_pair: tuple
    passes: bool
    cap: float
    grid_spec: dict = field(default_factory=dict)

    @property
    def c_best(self):
        return _exp_or_inf(self.log_c_best)

    def to_dict(self):
        d = asdict(self)
        d["c_best"] = self.c_best if math.isfinite(self.c_best) else None
        return d


def build_from_representation(beta, eps, t_nodes) -> Representation:
    """Parameter ``exp(beta(t) + int_1^t eps(s)/s ds)`` from bounded samples.

    ``beta`` and ``eps`` are arrays sampled at ``t_nodes`` or callables of ``t``.
    The nodes must start at ``t = 1`` and should be geometrically spaced; the
    integral is the trapezoid rule in ``log t``.
    """
    t = np.asarray(t_nodes, dtype=float)
    if t.ndim != 1 or t.size < 2 or not np.all(np.isfinite(t)):
        raise InvalidInput("need at least two finite sample abscissae")
    if t[-1] <= t[0]:
        raise InvalidInput("sample range has non-positive length")
    if t[0] != 1.0:
        raise InvalidInput("samples must start at t = 1")
    b = np.asarray(beta(t) if callable(beta) else beta, dtype=float)
    e = np.asarray(eps(t) if callable(eps) else eps, dtype=float)
    b = np.broadcast_to(b, t.shape).copy()
    e = np.broadcast_to(e, t.shape).copy()
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(e))):
        raise InvalidInput("beta and eps must be bounded on the sample range")
    return Representation(np.log(t), b, e)


def _slope_extremes(x, y, min_gap):
    lo, hi = math.inf, -math.inf
    for k in range(1, x.size):
        dx = x[k:] - x[:-k]
        ok = dx >= min_gap * (1 - 1e-12)
        if not ok.any():
            continue
        s = (y[k:] - y[:-k])[ok] / dx[ok]
        lo = min(lo, float(s.min()))
        hi = max(hi, float(s.max()))
    return lo, hi


def _tail_slopes(x, y, lambda_min, tail):
    keep = x >= x[0] + tail * (x[-1] - x[0])
    return _slope_extremes(x[keep], y[keep], math.log(lambda_min))


def _indices_on(x, y, lambda_min, tail):
    lo, hi = _tail_slopes(x, y, lambda_min, tail)
    if not math.isfinite(lo):
        raise InvalidInput("log range too short for the requested lambda_min")
    lo2, hi2 = _tail_slopes(x[::2], y[::2], lambda_min, tail)
    bracket = max(abs(lo - lo2), abs(hi - hi2)) if math.isfinite(lo2) else math.inf
    return IndexEstimate(lo, hi, bracket, (float(x[0]), float(x[-1])), int(x.size),
                         float(lambda_min), float(tail))


def matuszewska_indices(phi: ParamExpr, t_max=1e8, *, log_t_max=None, log_t_min=0.0,
                        density=DEFAULT_DENSITY, samples=None, lambda_min=2.0,
                        tail=0.5) -> IndexEstimate:
    """Estimate the lower and upper Matuszewska indices of ``phi``.

    ``sigma0``/``sigma1`` are the inf/sup of ``log(phi(lam t)/phi(t)) / log lam``
    over sampled pairs with ``lam >= lambda_min`` and both points in the upper
    ``1 - tail`` fraction of the log range, which stands in for ``t -> inf``.
    ``bracket`` is the change in either estimate when every other grid point
    is dropped. Slowly varying factors bias the estimate by roughly their
    log-derivative at the sampled ``t``.
    """
    if not lambda_min > 1:
        raise InvalidInput("lambda_min must exceed 1")
    if not 0 <= tail < 1:
        raise InvalidInput("tail must be in [0, 1)")
    x = log_grid(log_t_min, _upper_log(t_max, log_t_max), density, samples)
    return _indices_on(x, log_values(phi, x), lambda_min, tail)


def _widen(req, start, step_sign, max_widen, logcap):
    """Smallest widening ``d`` in ``[0, max_widen]`` with ``req(start + sign*d) <= logcap``."""
    if req(start)[0] <= logcap:
        return start, True
    far = start + step_sign * max_widen
    if req(far)[0] > logcap:
        return far, False
    lo, hi = 0.0, max_widen
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if req(start + step_sign * mid)[0] <= logcap:
            hi = mid
        else:
            lo = mid
    return start + step_sign * hi, True


def ro_membership(phi: ParamExpr, t_max=1e8, samples=None, *, log_t_max=None,
                  density=DEFAULT_DENSITY, cap=DEFAULT_CAP, max_widen=1.0,
                  lambda_min=2.0, tail=0.5) -> ROReport:
    """Certify ``c^-1 lam^s0 <= phi(lam t)/phi(t) <= c lam^s1`` on a sampled range.

    The exponents start at the index estimates of :func:`matuszewska_indices`
    (computed on the same grid) and are widened, each side independently and
    as little as possible, until the constant over *all* sampled pairs
    ``1 <= t <= lam t <= t_max`` is at most ``cap``. If more than ``max_widen``
    would be needed the function is reported as not RO on the range, with the
    worst pair as witness. The ``attained_*`` flags record whether the index
    estimate itself already admits a constant below the cap; this is grid
    evidence, not a proof.
    """
    x_hi = _upper_log(t_max, log_t_max)
    if x_hi < LN10 * (1 - 1e-12):
        raise InvalidInput("t_max must be at least 10")
    if samples is not None and samples < 64:
        raise InvalidInput("at least 64 samples are required")
    if not cap >= 1:
        raise InvalidInput("cap must be >= 1")
    x = log_grid(0.0, x_hi, density, samples)
    y = log_values(phi, x)
    est = _indices_on(x, y, lambda_min, tail)
    logcap = math.log(cap)

    def lower_req(s):
        return max_rise(s * x - y)

    def upper_req(s):
        return max_rise(y - s * x)

    s0, ok0 = _widen(lower_req, est.sigma0, -1.0, max_widen, logcap)
    s1, ok1 = _widen(upper_req, est.sigma1, +1.0, max_widen, logcap)
    attained_lower = lower_req(est.sigma0)[0] <= logcap
    attained_upper = upper_req(est.sigma1)[0] <= logcap
    grid_spec = {"log_t_min": 0.0, "log_t_max": x_hi, "samples": int(x.size),
                 "spacing": "uniform in log t", "max_widen": max_widen}
    log_c, lower, upper = power_bound_log_constant(x, y, s0, s1)
    witness = None
    if not (ok0 and ok1):
        _, i, j = lower if not ok0 else upper
        witness = (float(x[i]), float(x[j] - x[i]))
    return ROReport(ok0 and ok1, float(s0), float(s1), float(log_c), witness, grid_spec,
                    est, bool(attained_lower), bool(attained_upper), float(cap))


def check_weight_condition(phi: ParamExpr, *, report: ROReport | None = None, t_max=1e8,
                           dims=(1, 2, 3), points=300, seed=0):
    """Exponent ``l`` and observed constant ``c`` of ``mu(xi)/mu(eta) <= c (1+|xi-eta|)^l``.

    ``mu(xi) = phi(<xi>)`` with ``<xi> = (1+|xi|^2)^(1/2)``; ``l = max(0, -s0, s1)``
    from the RO certificate. ``c`` is the largest ratio seen over all pairs of
    ``points`` random frequencies per dimension in ``dims`` (radii spread
    geometrically up to ``<xi> = t_max``), and never less than 1.
    """
    if report is None:
        report = ro_membership(phi, t_max)
    if not report.is_member:
        raise PreconditionError("parameter is not RO-certified on the sampled range")
    l = max(0.0, -report.s0, report.s1)
    rng = np.random.default_rng(seed)
    r_max = math.sqrt(math.expm1(2 * min(report.grid_spec["log_t_max"], 300.0)))
    log_c = 0.0
    for n in dims:
        dirs = rng.standard_normal((points, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = np.concatenate(([0.0], np.geomspace(1e-3, r_max, points - 1)))
        pts = dirs * rng.permutation(radii)[:, None]
        y = log_values(phi, 0.5 * np.log1p(np.sum(pts ** 2, axis=1)))
        dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        ratio = y[:, None] - y[None, :] - l * np.log1p(dist)
        log_c = max(log_c, float(ratio.max()))
    return l, math.exp(log_c)


def psi_from_phi(phi: ParamExpr, s0, s1) -> PsiFromPhi:
    """Interpolation parameter ``psi`` with ``phi(t) = t^s0 psi(t^(s1-s0))``."""
    return PsiFromPhi(phi, s0, s1)


def phi_from_psi(psi: ParamExpr, s0, s1) -> PhiFromPsi:
    return PhiFromPsi(psi, s0, s1)


def pseudoconcavity_test(psi: ParamExpr, r=0.0, t_max=1e8, *, log_t_max=None, t_min=1.0,
                         density=DEFAULT_DENSITY, samples=None, cap=DEFAULT_CAP,
                         log_points=None) -> PseudoconcavityReport:
    """Best constant ``c`` in ``psi(t)/psi(tau) <= c max(1, t/tau)`` for ``t, tau > r``.

    The grid is geometric on ``(r, t_max]``; for ``r = 0`` it starts at ``t_min``.
    ``log_points`` replaces the grid by explicit ``log t`` values (those not
    above ``log r`` are dropped). Both orderings of every pair are examined,
    including ``t = tau``, so ``c_best >= 1``.
    """
    if r < 0:
        raise InvalidInput("r must be non-negative")
    if log_points is not None:
        x = np.unique(np.asarray(log_points, dtype=float))
        if r > 0:
            x = x[x > math.log(r)]
        if x.size == 0:
            raise InvalidInput("no sample points above r")
        spec = {"log_points": int(x.size)}
    else:
        x_hi = _upper_log(t_max, log_t_max)
        if r > 0:
            x_lo = math.log(r)
        else:
            if not t_min > 0:
                raise InvalidInput("t_min must be positive")
            x_lo = math.log(t_min)
        if x_hi <= max(x_lo, 0.0):
            raise InvalidInput("t_max must exceed max(r, 1)")
        x = log_grid(x_lo, x_hi, density, samples)
        if r > 0:
            x = x[1:]
        spec = {"log_t_min": float(x[0]), "log_t_max": float(x[-1]), "samples": int(x.size)}
    y = log_values(psi, x)
    # t >= tau: log psi(t) - log t - (log psi(tau) - log tau)
    up, i_up, j_up = max_rise(y - x)
    # t < tau: log psi(t) - log psi(tau)
    down, i_dn, j_dn = max_rise(-y)
    if up >= down:
        log_c, pair = up, (float(x[j_up]), float(x[i_up]))
    else:
        log_c, pair = down, (float(x[i_dn]), float(x[j_dn]))
    return PseudoconcavityReport(float(r), float(log_c), pair, log_c <= math.log(cap),
                                 float(cap), spec)


def concave_majorant(samples) -> ConcaveMajorant:
    """Least concave majorant of positive samples, as a function on ``(0, inf)``.

    ``samples`` is a sequence of ``(t, value)`` pairs with strictly increasing
    ``t > 0``. The upper hull keeps collinear points. A concave function that
    stays positive on a half-line cannot decrease, so the hull is cut at its
    maximum and continued flat. To the left of the first vertex the first
    segment is extended; if that line reaches a negative value at ``t = 0``
    the whole function is raised by ``|value at 0| + 1``.
    """
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise InvalidInput("need at least two (t, value) samples")
    t, v = pts[:, 0], pts[:, 1]
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
        raise InvalidInput("samples must be finite")
    if np.any(t <= 0) or not np.all(np.diff(t) > 0):
        raise InvalidInput("abscissae must be positive and strictly increasing")
    if np.any(v <= 0):
        raise InvalidInput("sample values must be positive")
    hull: list[int] = []
    for k in range(t.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (t[b] - t[a]) * (v[k] - v[a]) - (v[b] - v[a]) * (t[k] - t[a])
            if cross > 0:
                hull.pop()
            else:
                break
        hull.append(k)
    hv = v[hull]
    top = int(np.flatnonzero(hv == hv.max())[-1])
    hull = hull[: top + 1]
    ht, hv = t[hull], v[hull]
    slope = (hv[1] - hv[0]) / (ht[1] - ht[0]) if ht.size > 1 else 0.0
    at_zero = hv[0] - slope * ht[0]
    shift = abs(at_zero) + 1.0 if at_zero < 0 else 0.0
    return ConcaveMajorant(ht, hv, shift)


def reiteration_compose(f: ParamExpr, g: ParamExpr, psi: ParamExpr, *, t_max=1e8,
                        density=DEFAULT_DENSITY) -> Reiteration:
    """``omega(t) = f(t) psi(g(t)/f(t))``.

    ``f/g`` must stay bounded as ``t`` grows; if its sampled maximum over the
    upper half of the log range exceeds the maximum over the lower half, the
    returned node carries a warning (the composition is still returned).
    """
    x = log_grid(0.0, _upper_log(t_max, None), density)
    q = log_values(f, x) - log_values(g, x)
    log_values(psi, -q)
    mid = x.size // 2
    warning = None
    if q[mid:].max() > q[:mid].max() + 1e-9:
        warning = (f"f/g appears unbounded: max log(f/g) rises from {q[:mid].max():.6g} "
                   f"to {q[mid:].max():.6g} on [1, {t_max:g}]")
    return Reiteration(f, g, psi, warning)
