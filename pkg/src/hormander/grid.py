"""Discrete Hörmander norms on uniform periodic grids in one to three dimensions.

Conventions
-----------
A grid has ``N`` points per axis (even) on a box of side ``L``; sample ``k``
sits at ``x = (L/N) k``. Frequencies are ``xi = 2 pi k / L`` with ``k`` in
``{-N/2, ..., N/2 - 1}`` (numpy FFT order). The coefficient vector is

    c = (L/N)^(n/2) * fftn(u, norm="ortho")

so that ``sum |c|^2`` is the Riemann-sum ``L^2`` norm of the box and the
``H^phi`` norm is ``(sum phi(<xi>)^2 |c|^2)^(1/2)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInput, NumericalFailure
from .expr import ParamExpr
from .param import DEFAULT_CAP, DEFAULT_DENSITY, _upper_log, log_grid, log_values

QUOTIENT_SIZE_CAP = 4096
# iterative refinement on the FFT-evaluated residual; the system is ill-conditioned
# for fast-growing phi and one pass leaves visible errors in the weighted norm
REFINEMENT_STEPS = 2


def _box(box_length, n):
    box = np.broadcast_to(np.asarray(box_length, dtype=float), (n,))
    if not np.all(np.isfinite(box)) or np.any(box <= 0):
        raise InvalidInput("box length must be positive")
    return tuple(float(b) for b in box)


def _check_shape(shape):
    shape = tuple(int(s) for s in shape)
    if not 1 <= len(shape) <= 3:
        raise InvalidInput("grids have 1 to 3 dimensions")
    if any(s < 2 or s % 2 for s in shape):
        raise InvalidInput(f"points per axis must be even and >= 2, got {shape}")
    return shape


@dataclass(frozen=True, eq=False)
class GridDistribution:
    samples: np.ndarray
    box_length: tuple

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        _check_shape(s.shape)
        if not np.all(np.isfinite(s)):
            raise InvalidInput("samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "box_length", _box(self.box_length, s.ndim))

    @property
    def n(self):
        return self.samples.ndim

    @property
    def shape(self):
        return self.samples.shape

    @property
    def cell_volume(self):
        return math.prod(L / N for L, N in zip(self.box_length, self.shape))

    def __mul__(self, alpha):
        return GridDistribution(self.samples * alpha, self.box_length)

    __rmul__ = __mul__

    def __add__(self, other):
        return GridDistribution(self.samples + other.samples, self.box_length)

    def __sub__(self, other):
        return GridDistribution(self.samples - other.samples, self.box_length)


@dataclass(frozen=True, eq=False)
class DomainMask:
    """Grid points belonging to the subdomain; at least one must be set."""

    mask: np.ndarray
    box_length: tuple

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        _check_shape(m.shape)
        if not m.any():
            raise InvalidInput("mask selects no grid points")
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)
        object.__setattr__(self, "box_length", _box(self.box_length, m.ndim))

    @property
    def shape(self):
        return self.mask.shape

    @property
    def count(self):
        return int(self.mask.sum())


def frequency_vectors(shape, box_length) -> np.ndarray:
    """Physical frequencies, one row per coefficient in flattened FFT order."""
    shape = _check_shape(shape)
    box = _box(box_length, len(shape))
    axes = [2 * np.pi * np.fft.fftfreq(N, d=1.0 / N) / L for N, L in zip(shape, box)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def log_bracket(xi) -> np.ndarray:
    """``log <xi> = 0.5 log(1 + |xi|^2)`` for rows of ``xi``."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 1:
        xi = xi[:, None]
    return 0.5 * np.log1p(np.sum(xi * xi, axis=1))


def fourier_coefficients(u: GridDistribution) -> np.ndarray:
    return math.sqrt(u.cell_volume) * np.fft.fftn(u.samples, norm="ortho").ravel()


def weighted_norm(log_weights, coeffs) -> float:
    """``(sum exp(2 log_weights) |coeffs|^2)^(1/2)``, scaled to avoid overflow, fsum-accumulated."""
    mag = np.abs(np.asarray(coeffs))
    with np.errstate(divide="ignore"):
        a = np.asarray(log_weights, dtype=float) + np.log(mag)
    live = np.isfinite(a)
    if not live.any():
        return 0.0
    top = a[live].max()
    total = math.fsum(np.exp(2.0 * (a[live] - top)))
    return math.exp(top) * math.sqrt(total)


def l2_box_norm(u: GridDistribution) -> float:
    """Riemann-sum ``L^2`` norm ``((L/N)^n sum |u|^2)^(1/2)`` in physical space."""
    return math.sqrt(u.cell_volume * math.fsum(np.abs(u.samples.ravel()) ** 2))


def hormander_norm(u: GridDistribution, phi: ParamExpr) -> float:
    xi = frequency_vectors(u.shape, u.box_length)
    return weighted_norm(log_values(phi, log_bracket(xi)), fourier_coefficients(u))


def _masked_values(v, mask: DomainMask):
    if isinstance(v, GridDistribution):
        if v.shape != mask.shape:
            raise InvalidInput("distribution and mask grids differ")
        return v.samples[mask.mask]
    vals = np.asarray(v, dtype=complex).ravel()
    if vals.size != mask.count:
        raise InvalidInput(f"expected {mask.count} masked values, got {vals.size}")
    if not np.all(np.isfinite(vals)):
        raise InvalidInput("values must be finite")
    return vals


def quotient_minimizer(v, mask: DomainMask, phi: ParamExpr):
    """Minimum-norm extension of ``v`` off the mask, and its ``H^phi`` norm.

    With ``F`` the unitary DFT and ``M`` the selection of masked points, the
    minimizer is ``u = F^-1 diag(phi^-2) F M^T mu`` where ``mu`` solves
    ``(M F^-1 diag(phi^-2) F M^T) mu = v``. The system matrix is a real
    symmetric positive definite block of a circulant and is solved densely
    with partial pivoting, followed by iterative refinement.
    """
    shape = mask.shape
    size = math.prod(shape)
    if size > QUOTIENT_SIZE_CAP:
        raise InvalidInput(f"quotient norm is capped at {QUOTIENT_SIZE_CAP} grid points")
    vals = _masked_values(v, mask)
    lb = log_bracket(frequency_vectors(shape, mask.box_length)).reshape(shape)
    inv_w2 = np.exp(-2.0 * log_values(phi, lb))
    kernel = np.fft.ifftn(inv_w2).real
    pts = np.argwhere(mask.mask).astype(np.int64)
    flat = np.zeros((pts.shape[0], pts.shape[0]), dtype=np.int64)
    for ax, N in enumerate(shape):
        flat = flat * N + (pts[:, ax][:, None] - pts[:, ax][None, :]) % N
    K = kernel.ravel()[flat]
    del flat
    with warnings.catch_warnings():
        # singularity is detected below through the condition estimate
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(K, check_finite=False)
    anorm = np.linalg.norm(K, 1)
    rcond, info = scipy.linalg.lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or not rcond > np.finfo(float).eps:
        cond = math.inf if rcond == 0 else 1.0 / rcond
        raise NumericalFailure("quotient constraint system is singular", detail=cond)
    z = np.zeros(shape, dtype=complex)
    resid = vals
    for _ in range(1 + REFINEMENT_STEPS):
        sol = scipy.linalg.lu_solve((lu, piv), np.stack([resid.real, resid.imag], axis=1),
                                    check_finite=False)
        z[mask.mask] += sol[:, 0] + 1j * sol[:, 1]
        samples = np.fft.ifftn(inv_w2 * np.fft.fftn(z))
        resid = vals - samples[mask.mask]
    u = GridDistribution(samples, mask.box_length)
    return u, hormander_norm(u, phi)


def quotient_norm(v, mask: DomainMask, phi: ParamExpr) -> float:
    """``inf ||u||_{H^phi}`` over grid distributions ``u`` equal to ``v`` on the mask.

    ``v`` is a :class:`GridDistribution` (only masked samples are read) or
    the masked values in row-major order.
    """
    return quotient_minimizer(v, mask, phi)[1]


@dataclass
class EmbeddingReport:
    c0: float
    c1: float
    log_c0: float
    log_c1: float
    within_cap: bool
    witness_log_t: float | None
    log_t_max: float

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def embedding_scan(phi: ParamExpr, s0, s1, t_max=1e8, *, log_t_max=None,
                   density=DEFAULT_DENSITY, samples=None, cap=DEFAULT_CAP) -> EmbeddingReport:
    """Extremal constants with ``c0 t^s0 <= phi(t) <= c1 t^s1`` on ``[1, t_max]``.

    ``c0`` is the largest admissible lower constant and ``c1`` the smallest
    upper one. If ``c1 > cap`` or ``c0 < 1/cap`` the first sampled ``log t``
    where that happens is returned as the witness.
    """
    if not s0 < s1:
        raise InvalidInput("need s0 < s1")
    x_hi = _upper_log(t_max, log_t_max)
    x = log_grid(0.0, x_hi, density, samples)
    if samples is None and x_hi > 50.0:
        # keep full resolution near t = 1 where most features live
        x = np.union1d(log_grid(0.0, 50.0, density), x)
    y = log_values(phi, x)
    lo = np.minimum.accumulate(y - s0 * x)
    hi = np.maximum.accumulate(y - s1 * x)
    logcap = math.log(cap)
    bad = np.flatnonzero((hi > logcap) | (lo < -logcap))
    witness = float(x[bad[0]]) if bad.size else None
    lc0, lc1 = float(lo[-1]), float(hi[-1])
    return EmbeddingReport(math.exp(lc0) if lc0 > -745 else 0.0,
                           math.exp(lc1) if lc1 < 709 else math.inf,
                           lc0, lc1, witness is None, witness, float(x[-1]))
