"""Dissipative-force construction from the dissipation function.

The generalized dissipative force is built by scaling the rate-gradient
of the dissipation function so that its power output reproduces the
dissipation exactly:

    q = [Q / (dQ/dv . v)] * dQ/dv

which makes q . v = Q an algebraic identity wherever the denominator is
regular.  For dissipation positively homogeneous of degree d in the
rates, Euler's relation collapses this to q = (1/d) dQ/dv.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import autodiff as ad
from .autodiff import ScalarField
from .errors import SingularDissipation
from .model import State

__all__ = [
    "DissipativeForce",
    "dissipative_force",
    "homogeneity_degree",
    "verify_power_identity",
    "PowerIdentityReport",
    "norton_hoff_field",
]

#: relative floor below which the power denominator counts as singular
EPS_DENOMINATOR = 1e-14
#: relative floor below which the state counts as quiescent
EPS_QUIESCENT = 1e-14


@dataclass(frozen=True)
class DissipativeForce:
    """Generalized force conjugate to x, and its power q . v [W]."""

    q: np.ndarray
    power: float


def dissipative_force(Q: ScalarField, s: State) -> DissipativeForce:
    """Dissipative force at state s.

    At a quiescent state (v ~ 0, Q ~ 0) the construction is 0/0; the
    correct limit for dissipation vanishing superlinearly in v is zero
    force, and that limit is returned.  A vanishing denominator with
    non-negligible dissipation is an ill-posed constitutive input and
    raises :class:`SingularDissipation`.
    """
    vnorm = float(np.linalg.norm(s.v))
    if vnorm < 1e-12 * (1.0 + float(np.linalg.norm(s.x))):
        return DissipativeForce(np.zeros(s.n), 0.0)
    qval = ad.value(Q, s.x, s.v, s.t)
    gq = ad.grad_v(Q, s.x, s.v, s.t)
    den = float(gq @ s.v)
    if abs(den) <= EPS_DENOMINATOR * (1.0 + abs(qval)):
        if qval <= EPS_QUIESCENT * (1.0 + vnorm * vnorm):
            return DissipativeForce(np.zeros(s.n), 0.0)
        raise SingularDissipation(
            f"dQ/dv . v = {den} vanishes while Q = {qval} does not; "
            "the force construction is ill-posed at this state"
        )
    q = (qval / den) * gq
    return DissipativeForce(q, float(q @ s.v))


def homogeneity_degree(
    Q: ScalarField, s: State, rel_tol: float = 1e-8
) -> Optional[float]:
    """Degree d with Q(x, lam v) = lam^d Q(x, v), if Q is homogeneous.

    Uses the Euler-relation ratio (dQ/dv . v) / Q and requires it to be
    invariant under rate scalings lam in {0.5, 2}; returns None when the
    ratio is not invariant (inhomogeneous dissipation).
    """

    def ratio(scale):
        v = s.v * scale
        qval = ad.value(Q, s.x, v, s.t)
        if qval == 0.0:
            return None
        return float(ad.grad_v(Q, s.x, v, s.t) @ v) / qval

    d0 = ratio(1.0)
    if d0 is None:
        return None
    for lam in (0.5, 2.0):
        d = ratio(lam)
        if d is None or abs(d - d0) > rel_tol * (1.0 + abs(d0)):
            return None
    return d0


@dataclass(frozen=True)
class PowerIdentityReport:
    """Worst relative deviation of q . v from Q over a sample set."""

    max_rel_deviation: float
    n_samples: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_deviation <= self.tolerance


def verify_power_identity(
    Q: ScalarField, states: Iterable[State], tolerance: float = 1e-12
) -> PowerIdentityReport:
    """Check the identity q . v = Q over a sample of states."""
    worst = 0.0
    count = 0
    for s in states:
        f = dissipative_force(Q, s)
        qval = ad.value(Q, s.x, s.v, s.t)
        worst = max(worst, abs(f.power - qval) / (1.0 + abs(qval)))
        count += 1
    if count == 0:
        raise ValueError("empty sample set")
    return PowerIdentityReport(worst, count, tolerance)


def norton_hoff_field(alpha: float, m_exp: float, n: int) -> ScalarField:
    """Power-law (Norton-Hoff) dissipation Q = alpha * ||v||^m on an
    n-component rate vector; the closed-form force is
    alpha * ||v||^(m-2) * v."""
    if alpha <= 0 or m_exp <= 1:
        raise ValueError(f"need alpha > 0 and m > 1, got {alpha}, {m_exp}")

    def body(x, v, t):
        s = v[0] * v[0]
        for c in v[1:]:
            s = s + c * c
        return alpha * s ** (0.5 * m_exp)

    return ScalarField(body, n, n, name=f"Q_norton_hoff_m{m_exp}")
