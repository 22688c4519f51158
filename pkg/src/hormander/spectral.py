"""Finite-dimensional diagonal model of admissible Hilbert couples.

A couple is given by base weights ``w_j`` and the spectrum ``lam_j`` of its
generating operator ``J``:

    ||u||_{X0}^2   = sum w_j^2 |u_j|^2
    ||u||_{X1}^2   = sum w_j^2 lam_j^2 |u_j|^2
    ||u||_{Xpsi}^2 = sum w_j^2 psi(lam_j)^2 |u_j|^2

Weights and spectrum are stored as logarithms so that couples built from very
large frequencies, and the witness operators below, never overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import grid as _grid
from .errors import EvaluationError, InvalidInput, NumericalFailure
from .expr import ParamExpr
from .param import log_values, psi_from_phi, reiteration_compose

DENSE_SVD_LIMIT = 512


@dataclass(frozen=True, eq=False)
class DiagonalCouple:
    log_weights: np.ndarray
    log_spectrum: np.ndarray
    m: float

    def __post_init__(self):
        lw = np.array(self.log_weights, dtype=float).ravel()
        ll = np.array(self.log_spectrum, dtype=float).ravel()
        if lw.size < 1 or lw.shape != ll.shape:
            raise InvalidInput("weights and spectrum must be non-empty and of equal length")
        if not (np.all(np.isfinite(lw)) and np.all(np.isfinite(ll))):
            raise InvalidInput("weights and spectrum must be finite and positive")
        m = float(self.m)
        if not (math.isfinite(m) and m > 0):
            raise InvalidInput("lower spectral bound m must be positive")
        if ll.min() < math.log(m) - 1e-12 * max(1.0, abs(math.log(m))):
            raise InvalidInput("spectrum must be bounded below by m")
        lw.setflags(write=False)
        ll.setflags(write=False)
        object.__setattr__(self, "log_weights", lw)
        object.__setattr__(self, "log_spectrum", ll)
        object.__setattr__(self, "m", m)

    @classmethod
    def from_values(cls, base_weights, spectrum, m=None):
        w = np.asarray(base_weights, dtype=float)
        lam = np.asarray(spectrum, dtype=float)
        if np.any(w <= 0) or np.any(lam <= 0):
            raise InvalidInput("weights and spectrum must be positive")
        m = float(lam.min()) if m is None else m
        return cls(np.log(w), np.log(lam), m)

    @property
    def dim(self):
        return self.log_weights.size

    @property
    def base_weights(self):
        return np.exp(self.log_weights)

    @property
    def spectrum(self):
        return np.exp(self.log_spectrum)

    def to_dict(self):
        return {"base_weights": self.base_weights.tolist(),
                "spectrum": self.spectrum.tolist(), "m": self.m}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls.from_values(d["base_weights"], d["spectrum"], d.get("m"))
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed couple: {exc}") from exc


def make_sobolev_couple(freq_grid, s0, s1) -> DiagonalCouple:
    """Couple of Sobolev orders ``s0 < s1`` on a frequency grid.

    ``w = <xi>^s0``, ``lam = <xi>^(s1-s0)``, ``m = 1``.
    """
    if not s0 < s1:
        raise InvalidInput("need s0 < s1")
    lb = _grid.log_bracket(freq_grid)
    return DiagonalCouple(s0 * lb, (s1 - s0) * lb, 1.0)


def _psi_log_weights(couple, psi):
    try:
        lp = log_values(psi, couple.log_spectrum)
    except EvaluationError:
        with np.errstate(all="ignore"):
            raw = np.asarray(psi.log_eval(couple.log_spectrum), dtype=float)
        j = int(np.flatnonzero(~np.isfinite(raw))[0]) if raw.ndim else 0
        raise EvaluationError(
            f"psi cannot be evaluated at spectral point {j} "
            f"(lambda = exp({couple.log_spectrum[j]!r}))") from None
    return couple.log_weights + lp


def interp_norm(u, couple: DiagonalCouple, psi: ParamExpr) -> float:
    """``||psi(J) u||_{X0}``."""
    u = np.asarray(u).ravel()
    if u.size != couple.dim:
        raise InvalidInput(f"vector has {u.size} entries, couple has {couple.dim}")
    return _grid.weighted_norm(_psi_log_weights(couple, psi), u)


def embedding_constants(couple: DiagonalCouple, psi: ParamExpr):
    """``(C0, C1)`` with ``||u||_X0 <= C0 ||u||_Xpsi`` and ``||u||_Xpsi <= C1 ||u||_X1``."""
    lp = _psi_log_weights(couple, psi) - couple.log_weights
    return math.exp(float(np.max(-lp))), math.exp(float(np.max(lp - couple.log_spectrum)))


# -- linear maps -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DenseMap:
    matrix: np.ndarray

    def __post_init__(self):
        a = np.array(self.matrix, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInput("dense maps must be square matrices")
        object.__setattr__(self, "matrix", a)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def apply(self, u):
        return self.matrix @ np.asarray(u)

    def to_dict(self):
        a = self.matrix
        return {"kind": "dense", "shape": list(a.shape),
                "re": a.real.ravel().tolist(), "im": a.imag.ravel().tolist()}


@dataclass(frozen=True, eq=False)
class DiagonalMap:
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", np.array(self.entries, dtype=complex).ravel())

    @property
    def dim(self):
        return self.entries.size

    def apply(self, u):
        return self.entries * np.asarray(u)

    def to_dict(self):
        return {"kind": "diagonal", "re": self.entries.real.tolist(),
                "im": self.entries.imag.tolist()}


@dataclass(frozen=True)
class RankOneMap:
    """``e_src -> alpha e_dst``, every other basis vector to zero."""

    src: int
    dst: int
    alpha: complex
    dim: int

    def __post_init__(self):
        if not (0 <= self.src < self.dim and 0 <= self.dst < self.dim):
            raise InvalidInput("rank-one indices out of range")

    def apply(self, u):
        out = np.zeros(self.dim, dtype=complex)
        out[self.dst] = self.alpha * np.asarray(u)[self.src]
        return out

    def to_dict(self):
        a = complex(self.alpha)
        return {"kind": "rank_one", "src": self.src, "dst": self.dst,
                "alpha_re": a.real, "alpha_im": a.imag, "dim": self.dim}


@dataclass(frozen=True, eq=False)
class ConvolutionMap:
    """Circular convolution with ``kernel`` on a periodic grid.

    On a couple indexed by flattened Fourier coefficients (as built from
    :func:`hormander.grid.frequency_vectors`) it acts diagonally by
    ``fftn(kernel)``.
    """

    kernel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kernel", np.array(self.kernel, dtype=complex))

    @property
    def multiplier(self):
        return np.fft.fftn(self.kernel).ravel()

    @property
    def dim(self):
        return self.kernel.size

    def apply(self, u):
        return self.multiplier * np.asarray(u)

    def to_dict(self):
        k = self.kernel
        return {"kind": "convolution", "shape": list(k.shape),
                "re": k.real.ravel().tolist(), "im": k.imag.ravel().tolist()}


def map_from_dict(d):
    try:
        kind = d["kind"]
        if kind == "dense":
            a = np.asarray(d["re"], float) + 1j * np.asarray(d["im"], float)
            return DenseMap(a.reshape(d["shape"]))
        if kind == "diagonal":
            return DiagonalMap(np.asarray(d["re"], float) + 1j * np.asarray(d["im"], float))
        if kind == "rank_one":
            return RankOneMap(int(d["src"]), int(d["dst"]),
                              complex(d["alpha_re"], d.get("alpha_im", 0.0)), int(d["dim"]))
        if kind == "convolution":
            k = np.asarray(d["re"], float) + 1j * np.asarray(d["im"], float)
            return ConvolutionMap(k.reshape(d["shape"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed linear map: {exc}") from exc
    raise InvalidInput(f"unknown map kind {d.get('kind')!r}")


@dataclass
class OperatorNormTriple:
    n0: float
    n1: float
    npsi: float
    method: str
    tol: float
    seed: int | None = None

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _largest_singular_value(B, tol, max_iter, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(B.shape[1]) + 1j * rng.standard_normal(B.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = B.conj().T @ (B @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new = math.sqrt(nw)
        v = w / nw
        if abs(new - sigma) <= tol * new:
            return new
        sigma = new
    resid = np.linalg.norm(B.conj().T @ (B @ v) - sigma ** 2 * v)
    raise NumericalFailure(f"power iteration did not converge in {max_iter} steps",
                           detail=float(resid))


def operator_norms(T, couple: DiagonalCouple, psi: ParamExpr, *, tol=1e-10,
                   max_iter=100_000, seed=0) -> OperatorNormTriple:
    """Norms of ``T`` on ``X0``, ``X1`` and ``Xpsi``.

    Each norm is ``||D T D^-1||_2`` with ``D`` the diagonal weight of the
    geometry. Diagonal, convolution and rank-one maps use closed forms;
    dense maps use the largest singular value up to dimension 512 and power
    iteration beyond.
    """
    if T.dim != couple.dim:
        raise InvalidInput(f"map has dimension {T.dim}, couple has {couple.dim}")
    logs = (couple.log_weights, couple.log_weights + couple.log_spectrum,
            _psi_log_weights(couple, psi))
    if isinstance(T, (DiagonalMap, ConvolutionMap)):
        entries = T.entries if isinstance(T, DiagonalMap) else T.multiplier
        top = float(np.max(np.abs(entries)))
        return OperatorNormTriple(top, top, top, "exact-closed-form", 0.0)
    if isinstance(T, RankOneMap):
        a = abs(T.alpha)
        vals = [a * math.exp(ld[T.dst] - ld[T.src]) for ld in logs]
        return OperatorNormTriple(*vals, "exact-closed-form", 0.0)
    A = T.matrix
    out = []
    for ld in logs:
        B = A * np.exp(ld[:, None] - ld[None, :])
        if A.shape[0] <= DENSE_SVD_LIMIT:
            out.append(float(np.linalg.norm(B, 2)))
        else:
            out.append(_largest_singular_value(B, tol, max_iter, seed))
    if A.shape[0] <= DENSE_SVD_LIMIT:
        return OperatorNormTriple(*out, "singular-value", 0.0)
    return OperatorNormTriple(*out, "power-iteration", tol, seed)


def interpolation_bound_check(T, couple: DiagonalCouple, psi: ParamExpr, **kw) -> float:
    """``||T||_{Xpsi} / max(||T||_{X0}, ||T||_{X1})``; 0 for the zero map."""
    norms = operator_norms(T, couple, psi, **kw)
    denom = max(norms.n0, norms.n1)
    return 0.0 if denom == 0.0 else norms.npsi / denom


def rank_one_witness(psi: ParamExpr, log_lambda_src, log_lambda_dst, log_m=0.0) -> float:
    """Log of the interpolation ratio for ``e_src -> alpha e_dst`` with unit weights.

    With ``alpha = min(1, lam_src/lam_dst)`` the norms are ``alpha``,
    ``alpha lam_dst/lam_src`` and ``alpha psi(lam_dst)/psi(lam_src)``, so

        log ratio = log psi(lam_dst) - log psi(lam_src) - max(0, log lam_dst - log lam_src)

    Everything stays in log form; spectral points may be as large as ``exp(1e6)``.
    """
    a, b = float(log_lambda_src), float(log_lambda_dst)
    if min(a, b) < log_m:
        raise InvalidInput("spectral points must lie above the lower bound m")
    la, lb = log_values(psi, np.array([a, b]))
    return float(lb - la - max(0.0, b - a))


def reiteration_norm_check(couple: DiagonalCouple, f: ParamExpr, g: ParamExpr,
                           psi: ParamExpr, u) -> float:
    """Relative gap between ``||u||`` in ``[X_f, X_g]_psi`` and in ``X_omega``.

    The first is computed on the derived couple with weights ``w f(lam)`` and
    spectrum ``g(lam)/f(lam)``, the second with ``omega = f psi(g/f)`` on the
    original couple.
    """
    lf = log_values(f, couple.log_spectrum)
    lg = log_values(g, couple.log_spectrum)
    spec = lg - lf
    m = math.exp(float(spec.min()))
    if not (math.isfinite(m) and m > 0):
        raise InvalidInput("derived spectrum is not bounded below by a positive number")
    derived = DiagonalCouple(couple.log_weights + lf, spec, m)
    a = interp_norm(u, derived, psi)
    b = interp_norm(u, couple, reiteration_compose(f, g, psi))
    top = max(a, b)
    return 0.0 if top == 0.0 else abs(a - b) / top


def norm_identity_check(u, phi: ParamExpr, s0, s1, couple: DiagonalCouple | None = None) -> float:
    """Relative gap between the interpolation norm on the Sobolev couple of
    orders ``(s0, s1)`` with ``psi = psi_from_phi(phi, s0, s1)`` and the grid
    ``H^phi`` norm of ``u``.
    """
    xi = _grid.frequency_vectors(u.shape, u.box_length)
    if couple is None:
        couple = make_sobolev_couple(xi, s0, s1)
    elif couple.dim != xi.shape[0]:
        raise InvalidInput("couple and distribution grids do not match")
    a = interp_norm(_grid.fourier_coefficients(u), couple, psi_from_phi(phi, s0, s1))
    b = _grid.hormander_norm(u, phi)
    top = max(a, b)
    return 0.0 if top == 0.0 else abs(a - b) / top
