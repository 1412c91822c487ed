"""Forward-mode automatic differentiation with second-order duals.

A :class:`Dual` carries a value together with the first and second
directional derivatives along a single seed direction.  Gradients come
from one seeded pass per input component; Hessian entries come from the
polarization identity applied to directional second derivatives, so
everything is exact to machine precision (no finite-difference noise).

Scalar fields are written once, generically over the arithmetic: the
same body evaluates on plain floats and on duals.  Use the module-level
``sin``, ``cos``, ``exp``, ... inside field bodies so both paths work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch

__all__ = [
    "Dual",
    "ScalarField",
    "value",
    "grad_x",
    "grad_v",
    "hess_vv",
    "hess_vx",
    "time_partial",
    "sin",
    "cos",
    "tan",
    "exp",
    "log",
    "sqrt",
    "sinh",
    "cosh",
    "tanh",
]


class Dual:
    """Second-order dual number: value, directional first and second
    derivative along one seed direction.

    Seeding every derivative slot with zero reproduces the plain float
    computation bit-for-bit for +, - and *, because the value slot is
    combined with exactly the same floating-point operations.
    """

    __slots__ = ("v", "d", "dd")

    def __init__(self, v, d=0.0, dd=0.0):
        self.v = v
        self.d = d
        self.dd = dd

    def __repr__(self):
        return f"Dual({self.v!r}, {self.d!r}, {self.dd!r})"

    # -- arithmetic ------------------------------------------------------

    def __add__(self, o):
        if isinstance(o, Dual):
            return Dual(self.v + o.v, self.d + o.d, self.dd + o.dd)
        return Dual(self.v + o, self.d, self.dd)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Dual):
            return Dual(self.v - o.v, self.d - o.d, self.dd - o.dd)
        return Dual(self.v - o, self.d, self.dd)

    def __rsub__(self, o):
        return Dual(o - self.v, -self.d, -self.dd)

    def __mul__(self, o):
        if isinstance(o, Dual):
            return Dual(
                self.v * o.v,
                self.v * o.d + self.d * o.v,
                self.v * o.dd + 2.0 * self.d * o.d + self.dd * o.v,
            )
        return Dual(self.v * o, self.d * o, self.dd * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Dual):
            inv = 1.0 / o.v
            val = self.v * inv
            d = (self.d - val * o.d) * inv
            dd = (self.dd - 2.0 * d * o.d - val * o.dd) * inv
            return Dual(val, d, dd)
        inv = 1.0 / o
        return Dual(self.v * inv, self.d * inv, self.dd * inv)

    def __rtruediv__(self, o):
        inv = 1.0 / self.v
        val = o * inv
        # chain rule on 1/x scaled by o
        d = -val * self.d * inv
        dd = (2.0 * val * self.d * self.d * inv - val * self.dd) * inv
        return Dual(val, d, dd)

    def __neg__(self):
        return Dual(-self.v, -self.d, -self.dd)

    def __pos__(self):
        return self

    def __abs__(self):
        # one-sided value at the kink; sign(0) treated as +1
        s = 1.0 if self.v >= 0.0 else -1.0
        return Dual(s * self.v, s * self.d, s * self.dd)

    def __pow__(self, p):
        if isinstance(p, Dual):
            raise TypeError("dual exponents are not supported")
        if p == 2:
            return self * self
        val = self.v ** p
        g = p * self.v ** (p - 1)
        h = p * (p - 1) * self.v ** (p - 2)
        return Dual(val, g * self.d, h * self.d * self.d + g * self.dd)

    # comparisons act on the value slot

    def __lt__(self, o):
        return self.v < (o.v if isinstance(o, Dual) else o)

    def __le__(self, o):
        return self.v <= (o.v if isinstance(o, Dual) else o)

    def __gt__(self, o):
        return self.v > (o.v if isinstance(o, Dual) else o)

    def __ge__(self, o):
        return self.v >= (o.v if isinstance(o, Dual) else o)

    def __eq__(self, o):
        return self.v == (o.v if isinstance(o, Dual) else o)

    def __ne__(self, o):
        return not self.__eq__(o)

    def __hash__(self):
        return hash((self.v, self.d, self.dd))


def _lift(x, f, g, h):
    """Apply a smooth unary function with derivatives g, h via the chain
    rule: (f o u)'' = h(u) u'^2 + g(u) u''."""
    fv, gv, hv = f(x.v), g(x.v), h(x.v)
    return Dual(fv, gv * x.d, hv * x.d * x.d + gv * x.dd)


def sin(x):
    if isinstance(x, Dual):
        return _lift(x, math.sin, math.cos, lambda v: -math.sin(v))
    return math.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return _lift(x, math.cos, lambda v: -math.sin(v), lambda v: -math.cos(v))
    return math.cos(x)


def tan(x):
    if isinstance(x, Dual):
        t = math.tan(x.v)
        g = 1.0 + t * t
        return Dual(t, g * x.d, 2.0 * t * g * x.d * x.d + g * x.dd)
    return math.tan(x)


def exp(x):
    if isinstance(x, Dual):
        e = math.exp(x.v)
        return Dual(e, e * x.d, e * (x.d * x.d) + e * x.dd)
    return math.exp(x)


def log(x):
    if isinstance(x, Dual):
        return _lift(x, math.log, lambda v: 1.0 / v, lambda v: -1.0 / (v * v))
    return math.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        s = math.sqrt(x.v)
        g = 0.5 / s
        return Dual(s, g * x.d, -0.25 / (s * x.v) * x.d * x.d + g * x.dd)
    return math.sqrt(x)


def sinh(x):
    if isinstance(x, Dual):
        return _lift(x, math.sinh, math.cosh, math.sinh)
    return math.sinh(x)


def cosh(x):
    if isinstance(x, Dual):
        return _lift(x, math.cosh, math.sinh, math.cosh)
    return math.cosh(x)


def tanh(x):
    if isinstance(x, Dual):
        t = math.tanh(x.v)
        g = 1.0 - t * t
        return Dual(t, g * x.d, -2.0 * t * g * x.d * x.d + g * x.dd)
    return math.tanh(x)


@dataclass(frozen=True)
class ScalarField:
    """A scalar function of (x, v, t), written generically over the
    arithmetic so it can be evaluated on floats or on duals.

    body receives (x, v, t) with x and v as tuples; it must be
    deterministic and side-effect free.
    """

    body: Callable
    n_x: int
    n_v: int
    has_time: bool = False
    name: str = field(default="", compare=False)

    def check_dims(self, x, v):
        if len(x) != self.n_x or len(v) != self.n_v:
            raise DimensionMismatch(
                f"field {self.name or self.body!r} expects "
                f"(n_x={self.n_x}, n_v={self.n_v}), got ({len(x)}, {len(v)})"
            )


def _as_floats(seq):
    return tuple(float(c) for c in seq)


def value(f: ScalarField, x: Sequence[float], v: Sequence[float], t: float = 0.0) -> float:
    """Plain evaluation of f at (x, v, t)."""
    f.check_dims(x, v)
    return float(f.body(_as_floats(x), _as_floats(v), float(t)))


def _seeded(f, x, v, t, sx=None, sv=None, st=0.0):
    """Evaluate f with seed directions sx, sv (dicts index -> seed) and
    time seed st; returns the Dual result."""
    xs = tuple(
        Dual(float(c), sx[i]) if sx and i in sx else float(c) for i, c in enumerate(x)
    )
    vs = tuple(
        Dual(float(c), sv[i]) if sv and i in sv else float(c) for i, c in enumerate(v)
    )
    ts = Dual(float(t), st) if st else float(t)
    out = f.body(xs, vs, ts)
    if not isinstance(out, Dual):
        out = Dual(float(out))
    return out


def grad_x(f: ScalarField, x, v, t: float = 0.0) -> np.ndarray:
    """Exact gradient of f with respect to x (one seeded pass per entry)."""
    f.check_dims(x, v)
    return np.array([_seeded(f, x, v, t, sx={i: 1.0}).d for i in range(f.n_x)])


def grad_v(f: ScalarField, x, v, t: float = 0.0) -> np.ndarray:
    """Exact gradient of f with respect to v."""
    f.check_dims(x, v)
    return np.array([_seeded(f, x, v, t, sv={i: 1.0}).d for i in range(f.n_v)])


def hess_vv(f: ScalarField, x, v, t: float = 0.0) -> np.ndarray:
    """Exact Hessian d2f/dv_i dv_j via directional second derivatives and
    polarization: H_ij = (D2[e_i + e_j] - D2[e_i] - D2[e_j]) / 2."""
    f.check_dims(x, v)
    n = f.n_v
    diag = [_seeded(f, x, v, t, sv={i: 1.0}).dd for i in range(n)]
    H = np.empty((n, n))
    for i in range(n):
        H[i, i] = diag[i]
        for j in range(i + 1, n):
            both = _seeded(f, x, v, t, sv={i: 1.0, j: 1.0}).dd
            H[i, j] = H[j, i] = 0.5 * (both - diag[i] - diag[j])
    return H


def hess_vx(f: ScalarField, x, v, t: float = 0.0) -> np.ndarray:
    """Exact mixed block d2f/dv_i dx_j, by polarization of joint seeds."""
    f.check_dims(x, v)
    dv = [_seeded(f, x, v, t, sv={i: 1.0}).dd for i in range(f.n_v)]
    dx = [_seeded(f, x, v, t, sx={j: 1.0}).dd for j in range(f.n_x)]
    H = np.empty((f.n_v, f.n_x))
    for i in range(f.n_v):
        for j in range(f.n_x):
            both = _seeded(f, x, v, t, sx={j: 1.0}, sv={i: 1.0}).dd
            H[i, j] = 0.5 * (both - dv[i] - dx[j])
    return H


def time_partial(f: ScalarField, x, v, t: float = 0.0) -> float:
    """Partial derivative of f with respect to t at fixed (x, v); zero for
    time-independent fields."""
    f.check_dims(x, v)
    if not f.has_time:
        return 0.0
    return _seeded(f, x, v, t, st=1.0).d
