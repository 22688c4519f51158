"""Function parameters as evaluable expression trees.

Every node evaluates a positive function of ``t`` two ways:

* ``eval(t)`` works with ``t`` directly and is limited by floating range;
* ``log_eval(x)`` returns ``log phi(exp(x))`` and never forms ``t``, so it
  stays finite for ``x`` in the millions.

Analyses in :mod:`hormander.param` only ever call ``log_eval``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .errors import EvaluationError, InvalidInput

__all__ = [
    "ParamExpr", "Power", "LogShift", "Constant", "Sum", "Product", "PowerOf",
    "Compose", "AppendixParam", "Representation", "Table", "ConcaveMajorant",
    "PsiFromPhi", "PhiFromPsi", "Reiteration", "appendix_log_phi",
    "from_dict", "from_json",
]


def _as_array(v):
    arr = np.asarray(v, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


def _positive(value, what):
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise InvalidInput(f"{what} must be finite and > 0, got {value!r}")
    return value


def _finite(value, what):
    value = float(value)
    if not math.isfinite(value):
        raise InvalidInput(f"{what} must be finite, got {value!r}")
    return value


def appendix_log_phi(x):
    """``log phi(e^x)`` for the oscillating slowly varying counterexample.

    ``phi(t) = t**h(t) + log t`` for ``t >= 3`` with
    ``h(t) = (log t)**-0.5 * sin((log t)**0.25)``, and ``phi = 1`` below 3.
    In log coordinates ``h(t) log t = sqrt(x) sin(x**0.25)``, so the value is
    ``logaddexp(sqrt(x) sin(x**0.25), log x)``.
    """
    arr, scalar = _as_array(x)
    out = np.zeros_like(arr)
    hi = arr >= math.log(3.0)
    xs = arr[hi]
    out[hi] = np.logaddexp(np.sqrt(xs) * np.sin(xs ** 0.25), np.log(xs))
    return _ret(out, scalar)


class ParamExpr:
    """Base class for parameter expressions."""

    tag: ClassVar[str] = ""

    def log_eval(self, x):
        arr, scalar = _as_array(x)
        return _ret(self._log(arr), scalar)

    def eval(self, t):
        arr, scalar = _as_array(t)
        if np.any(arr <= 0):
            raise EvaluationError("parameters are defined for t > 0 only")
        with np.errstate(over="ignore"):
            return _ret(self._lin(arr), scalar)

    __call__ = eval

    def _log(self, x):
        raise NotImplementedError

    def _lin(self, t):
        with np.errstate(over="ignore"):
            return np.exp(self._log(np.log(t)))

    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def __mul__(self, other):
        other = other if isinstance(other, ParamExpr) else Constant(other)
        return Product((self, other))

    __rmul__ = __mul__

    def __add__(self, other):
        other = other if isinstance(other, ParamExpr) else Constant(other)
        return Sum((self, other))

    __radd__ = __add__

    def __pow__(self, exponent):
        return PowerOf(self, float(exponent))


@dataclass(frozen=True)
class Power(ParamExpr):
    s: float
    tag: ClassVar[str] = "power"

    def __post_init__(self):
        object.__setattr__(self, "s", _finite(self.s, "exponent"))

    def _log(self, x):
        return self.s * x

    def _lin(self, t):
        return t ** self.s

    def to_dict(self):
        return {"node": self.tag, "s": self.s}


@dataclass(frozen=True)
class LogShift(ParamExpr):
    """``t -> 1 + log t``; positive for ``t > 1/e``."""

    tag: ClassVar[str] = "log_shift"

    def _log(self, x):
        if np.any(x <= -1.0):
            bad = float(np.asarray(x)[x <= -1.0].flat[0])
            raise EvaluationError(f"1 + log t is not positive at log t = {bad!r}")
        return np.log1p(x)

    def _lin(self, t):
        return 1.0 + np.log(t)

    def to_dict(self):
        return {"node": self.tag}


@dataclass(frozen=True)
class Constant(ParamExpr):
    v: float
    tag: ClassVar[str] = "constant"

    def __post_init__(self):
        object.__setattr__(self, "v", _positive(self.v, "constant"))

    def _log(self, x):
        return np.full_like(x, math.log(self.v))

    def _lin(self, t):
        return np.full_like(t, self.v)

    def to_dict(self):
        return {"node": self.tag, "v": self.v}


@dataclass(frozen=True)
class Sum(ParamExpr):
    children: tuple
    tag: ClassVar[str] = "sum"

    def __post_init__(self):
        kids = []
        for c in self.children:
            kids.extend(c.children if isinstance(c, Sum) else (c,))
        if not kids:
            raise InvalidInput("sum needs at least one term")
        object.__setattr__(self, "children", tuple(kids))

    def _log(self, x):
        return np.logaddexp.reduce([c._log(x) for c in self.children], axis=0)

    def _lin(self, t):
        return np.sum([c._lin(t) for c in self.children], axis=0)

    def to_dict(self):
        return {"node": self.tag, "children": [c.to_dict() for c in self.children]}


@dataclass(frozen=True)
class Product(ParamExpr):
    children: tuple
    tag: ClassVar[str] = "product"

    def __post_init__(self):
        kids = []
        for c in self.children:
            kids.extend(c.children if isinstance(c, Product) else (c,))
        if not kids:
            raise InvalidInput("product needs at least one factor")
        object.__setattr__(self, "children", tuple(kids))

    def _log(self, x):
        return np.sum([c._log(x) for c in self.children], axis=0)

    def _lin(self, t):
        return np.prod([c._lin(t) for c in self.children], axis=0)

    def to_dict(self):
        return {"node": self.tag, "children": [c.to_dict() for c in self.children]}


@dataclass(frozen=True)
class PowerOf(ParamExpr):
    base: ParamExpr
    exponent: float
    tag: ClassVar[str] = "power_of"

    def __post_init__(self):
        object.__setattr__(self, "exponent", _finite(self.exponent, "exponent"))

    def _log(self, x):
        return self.exponent * self.base._log(x)

    def _lin(self, t):
        return self.base._lin(t) ** self.exponent

    def to_dict(self):
        return {"node": self.tag, "base": self.base.to_dict(), "exponent": self.exponent}


@dataclass(frozen=True)
class Compose(ParamExpr):
    """``t -> outer(inner(t))``."""

    outer: ParamExpr
    inner: ParamExpr
    tag: ClassVar[str] = "compose"

    def _log(self, x):
        return self.outer._log(self.inner._log(x))

    def _lin(self, t):
        return self.outer._lin(self.inner._lin(t))

    def to_dict(self):
        return {"node": self.tag, "outer": self.outer.to_dict(), "inner": self.inner.to_dict()}


@dataclass(frozen=True)
class AppendixParam(ParamExpr):
    """The slowly varying, non-pseudoconcave parameter (see :func:`appendix_log_phi`)."""

    tag: ClassVar[str] = "appendix"

    def _log(self, x):
        return appendix_log_phi(x)

    def _lin(self, t):
        out = np.ones_like(t)
        hi = t >= 3.0
        lt = np.log(t[hi])
        h = lt ** -0.5 * np.sin(lt ** 0.25)
        out[hi] = t[hi] ** h + lt
        return out

    def to_dict(self):
        return {"node": self.tag}


def _check_nodes(x, what):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InvalidInput(f"{what} needs at least two abscissae")
    if not np.all(np.isfinite(x)):
        raise InvalidInput(f"{what} abscissae must be finite")
    if not np.all(np.diff(x) > 0):
        raise InvalidInput(f"{what} abscissae must be strictly increasing")
    return x


@dataclass(frozen=True, eq=False)
class Representation(ParamExpr):
    """``exp(beta(t) + int_1^t eps(s)/s ds)`` from samples at nodes ``log_t``.

    ``beta`` and ``eps`` are linearly interpolated in ``x = log t``; the
    integral of the interpolated ``eps`` is exact, so at the nodes it equals the
    cumulative trapezoid rule. Left of ``t = 1`` the value is held at ``phi(1)``;
    right of the last node ``beta`` is held and ``eps`` continues at its last value.
    """

    log_t: np.ndarray
    beta: np.ndarray
    eps: np.ndarray
    integral: np.ndarray = field(init=False, repr=False)
    tag: ClassVar[str] = "representation"

    def __post_init__(self):
        x = _check_nodes(self.log_t, "representation")
        if x[0] != 0.0:
            raise InvalidInput("representation nodes must start at t = 1")
        beta = np.asarray(self.beta, dtype=float)
        eps = np.asarray(self.eps, dtype=float)
        if beta.shape != x.shape or eps.shape != x.shape:
            raise InvalidInput("beta and eps must be sampled at every node")
        if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(eps))):
            raise InvalidInput("beta and eps must be bounded (finite) samples")
        steps = 0.5 * np.diff(x) * (eps[1:] + eps[:-1])
        integral = np.concatenate(([0.0], np.cumsum(steps)))
        for name, val in (("log_t", x), ("beta", beta), ("eps", eps), ("integral", integral)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    def _log(self, x):
        xs, b, e, cum = self.log_t, self.beta, self.eps, self.integral
        xc = np.maximum(x, xs[0])
        i = np.clip(np.searchsorted(xs, xc, side="right") - 1, 0, xs.size - 2)
        h = xs[i + 1] - xs[i]
        d = xc - xs[i]
        inside = xc <= xs[-1]
        slope = np.where(inside, (e[i + 1] - e[i]) / h, 0.0)
        # past the last node: eps frozen at e[-1], anchored at the last node
        i = np.where(inside, i, xs.size - 1)
        d = np.where(inside, d, xc - xs[-1])
        integ = cum[i] + e[i] * d + 0.5 * slope * d * d
        bt = np.interp(xc, xs, b)
        return bt + integ

    def to_dict(self):
        return {"node": self.tag, "log_t": self.log_t.tolist(),
                "beta": self.beta.tolist(), "eps": self.eps.tolist()}


@dataclass(frozen=True, eq=False)
class Table(ParamExpr):
    """Tabulated parameter, interpolated linearly in log-log coordinates.

    Power functions are reproduced exactly. Outside the table the end
    segments are continued as power laws.
    """

    t: np.ndarray
    values: np.ndarray
    tag: ClassVar[str] = "table"

    def __post_init__(self):
        t = _check_nodes(self.t, "table")
        v = np.asarray(self.values, dtype=float)
        if v.shape != t.shape:
            raise InvalidInput("table needs one value per abscissa")
        if np.any(t <= 0):
            raise InvalidInput("table abscissae must be > 0")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise InvalidInput("table values must be finite and > 0")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)

    def _log(self, x):
        lx, ly = np.log(self.t), np.log(self.values)
        y = np.interp(x, lx, ly)
        lo_slope = (ly[1] - ly[0]) / (lx[1] - lx[0])
        hi_slope = (ly[-1] - ly[-2]) / (lx[-1] - lx[-2])
        y = np.where(x < lx[0], ly[0] + lo_slope * (x - lx[0]), y)
        return np.where(x > lx[-1], ly[-1] + hi_slope * (x - lx[-1]), y)

    def to_dict(self):
        return {"node": self.tag, "t": self.t.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class ConcaveMajorant(ParamExpr):
    """Piecewise-linear concave function through hull vertices ``(t, v)``.

    Left of the first vertex the first segment is continued (the right-hand
    tangent there); right of the last vertex the function is flat. ``shift``
    is added everywhere and is non-zero only when the tangent continuation
    would go negative before reaching ``t = 0``.
    """

    t: np.ndarray
    v: np.ndarray
    shift: float = 0.0
    tag: ClassVar[str] = "concave_majorant"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 1:
            raise InvalidInput("majorant needs matching vertex arrays")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise InvalidInput("majorant vertices must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "shift", float(self.shift))

    @property
    def left_slope(self):
        if self.t.size == 1:
            return 0.0
        return (self.v[1] - self.v[0]) / (self.t[1] - self.t[0])

    def hull(self, t):
        """The unshifted envelope."""
        arr, scalar = _as_array(t)
        y = np.interp(arr, self.t, self.v)
        y = np.where(arr < self.t[0], self.v[0] + self.left_slope * (arr - self.t[0]), y)
        return _ret(y, scalar)

    def _lin(self, t):
        return self.hull(t) + self.shift

    def _log(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self._lin(np.exp(np.minimum(x, math.log(self.t[-1])))))

    def to_dict(self):
        return {"node": self.tag, "t": self.t.tolist(), "v": self.v.tolist(),
                "shift": self.shift}


def _check_exponents(s0, s1):
    s0, s1 = _finite(s0, "s0"), _finite(s1, "s1")
    if not s0 < s1:
        raise InvalidInput(f"need s0 < s1, got s0={s0!r}, s1={s1!r}")
    return s0, s1


@dataclass(frozen=True)
class PsiFromPhi(ParamExpr):
    """``tau**(-s0/(s1-s0)) * phi(tau**(1/(s1-s0)))`` for ``tau >= 1``, ``phi(1)`` below."""

    phi: ParamExpr
    s0: float
    s1: float
    tag: ClassVar[str] = "psi_from_phi"

    def __post_init__(self):
        s0, s1 = _check_exponents(self.s0, self.s1)
        object.__setattr__(self, "s0", s0)
        object.__setattr__(self, "s1", s1)

    def _log(self, x):
        d = self.s1 - self.s0
        xx = np.maximum(x, 0.0)
        return (-self.s0 / d) * xx + self.phi._log(xx / d)

    def _lin(self, t):
        d = self.s1 - self.s0
        tt = np.maximum(t, 1.0)
        return tt ** (-self.s0 / d) * self.phi._lin(tt ** (1.0 / d))

    def to_dict(self):
        return {"node": self.tag, "phi": self.phi.to_dict(), "s0": self.s0, "s1": self.s1}


@dataclass(frozen=True)
class PhiFromPsi(ParamExpr):
    """``t**s0 * psi(t**(s1-s0))``."""

    psi: ParamExpr
    s0: float
    s1: float
    tag: ClassVar[str] = "phi_from_psi"

    def __post_init__(self):
        s0, s1 = _check_exponents(self.s0, self.s1)
        object.__setattr__(self, "s0", s0)
        object.__setattr__(self, "s1", s1)

    def _log(self, x):
        return self.s0 * x + self.psi._log((self.s1 - self.s0) * x)

    def _lin(self, t):
        return t ** self.s0 * self.psi._lin(t ** (self.s1 - self.s0))

    def to_dict(self):
        return {"node": self.tag, "psi": self.psi.to_dict(), "s0": self.s0, "s1": self.s1}


@dataclass(frozen=True)
class Reiteration(ParamExpr):
    """``f(t) * psi(g(t) / f(t))``; ``warning`` records a failed boundedness check."""

    f: ParamExpr
    g: ParamExpr
    psi: ParamExpr
    warning: str | None = field(default=None, compare=False)
    tag: ClassVar[str] = "reiteration"

    def _log(self, x):
        lf = self.f._log(x)
        return lf + self.psi._log(self.g._log(x) - lf)

    def _lin(self, t):
        ft = self.f._lin(t)
        return ft * self.psi._lin(self.g._lin(t) / ft)

    def to_dict(self):
        d = {"node": self.tag, "f": self.f.to_dict(), "g": self.g.to_dict(),
             "psi": self.psi.to_dict()}
        if self.warning:
            d["warning"] = self.warning
        return d


def from_dict(d) -> ParamExpr:
    """Rebuild an expression from its JSON tree."""
    if not isinstance(d, dict) or "node" not in d:
        raise InvalidInput("expression nodes are objects with a 'node' tag")
    tag = d["node"]
    try:
        if tag == "power":
            return Power(d["s"])
        if tag == "log_shift":
            return LogShift()
        if tag == "constant":
            return Constant(d["v"])
        if tag in ("sum", "product"):
            kids = tuple(from_dict(c) for c in d["children"])
            return (Sum if tag == "sum" else Product)(kids)
        if tag == "power_of":
            return PowerOf(from_dict(d["base"]), d["exponent"])
        if tag == "compose":
            return Compose(from_dict(d["outer"]), from_dict(d["inner"]))
        if tag == "appendix":
            return AppendixParam()
        if tag == "representation":
            return Representation(d["log_t"], d["beta"], d["eps"])
        if tag == "table":
            return Table(d["t"], d["values"])
        if tag == "concave_majorant":
            return ConcaveMajorant(d["t"], d["v"], d.get("shift", 0.0))
        if tag == "psi_from_phi":
            return PsiFromPhi(from_dict(d["phi"]), d["s0"], d["s1"])
        if tag == "phi_from_psi":
            return PhiFromPsi(from_dict(d["psi"]), d["s0"], d["s1"])
        if tag == "reiteration":
            return Reiteration(from_dict(d["f"]), from_dict(d["g"]),
                               from_dict(d["psi"]), d.get("warning"))
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"malformed {tag!r} node: {exc}") from exc
    raise InvalidInput(f"unknown expression node {tag!r}")


def from_json(text: str) -> ParamExpr:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"not valid JSON: {exc}") from exc
    return from_dict(data)
