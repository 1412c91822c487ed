"""Physical system definition: the potential triple (K, G, Q) and the
state it is evaluated on.

A system is fully specified by its kinetic energy K(x, v), potential
energy G(x, t) and dissipation function Q(x, v), together with the
coordinate dimension.  Two systems are built in:

* ``disk_damper`` -- a point mass on a massless disk with a horizontal
  damper; kinetic energy m r^2 (1 + sin phi) phidot^2, potential
  m g r sin phi, dissipation eta r^2 (1 + cos phi)^2 phidot^2.
* ``rayleigh_oscillator`` -- the classical linear damped oscillator
  (K = m v^2 / 2, G = k x^2 / 2, Q = eta v^2), used as a regression
  target: the pipeline must reproduce m xdd + eta xd + k x = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import ScalarField
from .errors import DimensionMismatch, InvalidParameter

__all__ = [
    "State",
    "SystemModel",
    "build_disk_damper",
    "build_rayleigh_oscillator",
    "build_system",
    "BUILTIN_SYSTEMS",
]

_VALIDATION_SAMPLES = 10_000


@dataclass(frozen=True)
class State:
    """Generalized coordinates x, rates v (= xdot) and time t [s]."""

    x: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "v", np.atleast_1d(np.asarray(self.v, dtype=float)))
        object.__setattr__(self, "t", float(self.t))
        if self.x.shape != self.v.shape or self.x.ndim != 1:
            raise DimensionMismatch(
                f"x and v must be 1-d and of equal length, got {self.x.shape} / {self.v.shape}"
            )
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v)) and np.isfinite(self.t)):
            raise InvalidParameter("state entries must be finite")

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class SystemModel:
    """The potential triple plus dimension; immutable and shareable.

    ``sample_box`` is the (x, v) box used for the stochastic construction
    checks: Q(x, 0) = 0 and Q(x, v) >= 0 on seeded samples (the
    dissipation function must be a nonnegative power), and rejection of
    dissipation that is positively homogeneous of degree <= 1 in v
    (rate-independent kinetics are out of scope; the force construction
    would be unbounded at v -> 0).
    """

    n: int
    K: ScalarField
    G: ScalarField
    Q: ScalarField
    labels: tuple[str, ...]
    sample_box: tuple[float, float] = (-3.0, 3.0)
    validate: bool = True
    name: str = dc_field(default="", compare=False)

    def __post_init__(self):
        if len(self.labels) != self.n:
            raise DimensionMismatch("one label per coordinate required")
        if self.validate:
            self._check_dissipation()

    def _check_dissipation(self):
        lo, hi = self.sample_box
        rng = np.random.Generator(np.random.Philox(20240901))
        xs = rng.uniform(lo, hi, size=(_VALIDATION_SAMPLES, self.n))
        vs = rng.uniform(lo, hi, size=(_VALIDATION_SAMPLES, self.n))
        zero = [0.0] * self.n
        scale = 1.0 + abs(hi - lo)
        for k in range(_VALIDATION_SAMPLES):
            q = ad.value(self.Q, xs[k], vs[k])
            if q < -1e-12 * scale:
                raise InvalidParameter(
                    f"dissipation function is negative at x={xs[k]}, v={vs[k]}: Q={q}"
                )
            if k < 100:
                q0 = ad.value(self.Q, xs[k], zero)
                if abs(q0) > 1e-12 * scale:
                    raise InvalidParameter(
                        f"dissipation function does not vanish at rest: Q(x, 0)={q0}"
                    )
        self._check_degree(rng)

    def _check_degree(self, rng):
        from .tep import homogeneity_degree  # deferred: tep builds on model

        lo, hi = self.sample_box
        for _ in range(8):
            s = State(rng.uniform(lo, hi, self.n), rng.uniform(lo, hi, self.n))
            if ad.value(self.Q, s.x, s.v) <= 1e-12:
                continue
            deg = homogeneity_degree(self.Q, s)
            if deg is not None and deg <= 1.0 + 1e-6:
                raise InvalidParameter(
                    f"dissipation homogeneous of degree {deg:.6g} <= 1 in the rates; "
                    "rate-independent kinetics are not supported"
                )
            return


def build_disk_damper(
    m: float, r: float, eta: float, g: float, validate: bool = True
) -> SystemModel:
    """Point mass on a massless disk of radius r with a horizontal damper.

    The rate-Hessian of K is 2 m r^2 (1 + sin phi); it vanishes at
    phi = -pi/2 + 2 pi k (the mass passes through the disk center),
    a degenerate point that is representable in the model but rejected
    by the acceleration solve.
    """
    if m <= 0 or r <= 0:
        raise InvalidParameter(f"need m > 0 and r > 0, got m={m}, r={r}")
    if eta < 0 or g < 0:
        raise InvalidParameter(f"need eta >= 0 and g >= 0, got eta={eta}, g={g}")

    def k_body(x, v, t):
        return m * r * r * (1.0 + ad.sin(x[0])) * v[0] * v[0]

    def g_body(x, v, t):
        return m * g * r * ad.sin(x[0])

    def q_body(x, v, t):
        c = 1.0 + ad.cos(x[0])
        return eta * r * r * c * c * v[0] * v[0]

    return SystemModel(
        n=1,
        K=ScalarField(k_body, 1, 1, name="K_disk"),
        G=ScalarField(g_body, 1, 1, name="G_disk"),
        Q=ScalarField(q_body, 1, 1, name="Q_disk"),
        labels=("phi",),
        sample_box=(-3.0, 3.0),
        validate=validate,
        name="disk_damper",
    )


def build_rayleigh_oscillator(
    m: float, k: float, eta: float, validate: bool = True
) -> SystemModel:
    """Linear damped oscillator; classical-limit regression system."""
    if m <= 0:
        raise InvalidParameter(f"need m > 0, got m={m}")
    if k < 0 or eta < 0:
        raise InvalidParameter(f"need k >= 0 and eta >= 0, got k={k}, eta={eta}")

    return SystemModel(
        n=1,
        K=ScalarField(lambda x, v, t: 0.5 * m * v[0] * v[0], 1, 1, name="K_rayleigh"),
        G=ScalarField(lambda x, v, t: 0.5 * k * x[0] * x[0], 1, 1, name="G_rayleigh"),
        Q=ScalarField(lambda x, v, t: eta * v[0] * v[0], 1, 1, name="Q_rayleigh"),
        labels=("x",),
        sample_box=(-3.0, 3.0),
        validate=validate,
        name="rayleigh_oscillator",
    )


BUILTIN_SYSTEMS = {
    "disk_damper": (build_disk_damper, ("m", "r", "eta", "g")),
    "rayleigh_oscillator": (build_rayleigh_oscillator, ("m", "k", "eta")),
}


def build_system(system_id: str, parameters: dict) -> SystemModel:
    """Instantiate a builtin system from an id and a parameter map."""
    if system_id not in BUILTIN_SYSTEMS:
        raise InvalidParameter(
            f"unknown system {system_id!r}; known: {sorted(BUILTIN_SYSTEMS)}"
        )
    builder, names = BUILTIN_SYSTEMS[system_id]
    missing = [p for p in names if p not in parameters]
    extra = [p for p in parameters if p not in names]
    if missing or extra:
        raise InvalidParameter(
            f"system {system_id!r} takes parameters {names}; "
            f"missing {missing}, unexpected {extra}"
        )
    return builder(**{p: float(parameters[p]) for p in names})
