"""Assembly and integration of the dissipative force balance.

The evolution equation balances three generalized forces: the inertial
term D_K = d/dt dK/dv - dK/dx, the potential gradient dG/dx, and the
dissipative force q built in :mod:`tepdyn.tep`:

    D_K + dG/dx + q = 0.

Because q depends on (x, v) only, the balance is linear in the
accelerations: expanding d/dt dK/dv gives

    hess_vv(K) a = dK/dx - hess_vx(K) v - dG/dx - q,

one symmetric solve per step, with the rate-Hessian of K acting as mass
matrix.  Fixed-step RK4 is the default integrator; an embedded RKF45
pair with step control is available.

Along any solution with time-independent G the Legendre energy
E = v . dK/dv - K + G satisfies dE/dt = -Q, which the integrator audits
step by step.  The audit doubles as a resolution guard: trajectories
that approach a degenerate mass-matrix point (disk_damper creeps into
its coordinate singularity at phi = -pi/2, where double precision
cannot represent 1 + sin phi) are truncated cleanly instead of being
allowed to go unstable, and the returned trajectory carries a failure
marker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import autodiff as ad
from .autodiff import ScalarField
from .errors import DegenerateMass, DimensionMismatch, StepSizeUnderflow, TepdynError
from .model import State, SystemModel
from .tep import dissipative_force

__all__ = [
    "ForceDecomposition",
    "Trajectory",
    "IntegratorOptions",
    "variational_derivative_K",
    "residual",
    "solve_acceleration",
    "legendre_energy",
    "integrate",
]


@dataclass(frozen=True)
class ForceDecomposition:
    """The force ingredients of the balance at one (state, acceleration)
    point; residual = d_k + grad_g + q vanishes on solutions."""

    d_k: np.ndarray
    grad_g: np.ndarray
    q: np.ndarray

    @property
    def residual(self) -> np.ndarray:
        return self.d_k + self.grad_g + self.q


def _kinetic_terms(K: ScalarField, s: State):
    """(dK/dx, hess_vv, hess_vx) in n_x + n_v + n_x*n_v + n_v(n_v-1)/2
    seeded passes, sharing the diagonal second-derivative passes."""
    n = s.n
    x, v, t = s.x, s.v, s.t
    gx = np.empty(n)
    dxx = np.empty(n)
    dvv = np.empty(n)
    for i in range(n):
        out = ad._seeded(K, x, v, t, sx={i: 1.0})
        gx[i], dxx[i] = out.d, out.dd
        dvv[i] = ad._seeded(K, x, v, t, sv={i: 1.0}).dd
    hvv = np.empty((n, n))
    hvx = np.empty((n, n))
    for i in range(n):
        hvv[i, i] = dvv[i]
        for j in range(i + 1, n):
            both = ad._seeded(K, x, v, t, sv={i: 1.0, j: 1.0}).dd
            hvv[i, j] = hvv[j, i] = 0.5 * (both - dvv[i] - dvv[j])
        for j in range(n):
            both = ad._seeded(K, x, v, t, sx={j: 1.0}, sv={i: 1.0}).dd
            hvx[i, j] = 0.5 * (both - dvv[i] - dxx[j])
    return gx, hvv, hvx


def variational_derivative_K(K: ScalarField, s: State, a: np.ndarray) -> np.ndarray:
    """Inertial force D_K = d/dt dK/dv - dK/dx, expanded by the chain
    rule as hess_vv a + hess_vx v - dK/dx."""
    a = np.asarray(a, dtype=float)
    if a.shape != s.x.shape:
        raise DimensionMismatch(f"acceleration shape {a.shape} != state shape {s.x.shape}")
    gx, hvv, hvx = _kinetic_terms(K, s)
    return hvv @ a + hvx @ s.v - gx


def residual(model: SystemModel, s: State, a: np.ndarray) -> ForceDecomposition:
    """Force decomposition at (s, a); its residual is zero exactly when
    (s, a) satisfies the balance."""
    d_k = variational_derivative_K(model.K, s, a)
    grad_g = ad.grad_x(model.G, s.x, s.v, s.t)
    q = dissipative_force(model.Q, s).q
    return ForceDecomposition(d_k, grad_g, q)


def _mass_check(hvv: np.ndarray, s: State):
    if hvv.shape[0] == 1:
        m = hvv[0, 0]
        if not (m > 0.0) or not math.isfinite(m):
            raise DegenerateMass(f"mass matrix {m} not positive at t={s.t}", state=s)
        return
    w = np.linalg.eigvalsh(hvv)
    if w[0] <= 0.0 or w[0] < 1e-10 * w[-1]:
        raise DegenerateMass(
            f"mass matrix near-singular (eigenvalues {w}) at t={s.t}", state=s
        )


def solve_acceleration(model: SystemModel, s: State) -> np.ndarray:
    """Accelerations from one symmetric linear solve of the balance."""
    gx, hvv, hvx = _kinetic_terms(model.K, s)
    _mass_check(hvv, s)
    b = gx - hvx @ s.v - ad.grad_x(model.G, s.x, s.v, s.t) - dissipative_force(model.Q, s).q
    if s.n == 1:
        a = b / hvv[0, 0]
    else:
        a = np.linalg.solve(hvv, b)
    defect = np.linalg.norm(hvv @ a - b)
    if not defect <= 1e-10 * (1.0 + np.linalg.norm(b)):
        raise DegenerateMass(f"acceleration solve defect {defect}", state=s)
    return a


def legendre_energy(model: SystemModel, s: State) -> float:
    """E = v . dK/dv - K + G; equals K + G for K quadratic in the rates."""
    gv = ad.grad_v(model.K, s.x, s.v, s.t)
    return float(
        s.v @ gv
        - ad.value(model.K, s.x, s.v, s.t)
        + ad.value(model.G, s.x, s.v, s.t)
    )


@dataclass(frozen=True)
class IntegratorOptions:
    """Time-stepping options.

    balance_guard, when set, truncates the trajectory as soon as the
    per-step energy audit |dE + Q dt| exceeds guard * (1 + |E|): a
    physics-based detector for under-resolved or unstable stepping.
    """

    method: str = "rk4"
    dt: float = 1e-3
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    sample_stride: int = 1
    balance_guard: Optional[float] = None
    max_steps: int = 20_000_000
    min_dt: float = 1e-14

    def __post_init__(self):
        if self.method not in ("rk4", "rkf45"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.dt <= 0 or self.sample_stride < 1:
            raise ValueError("dt must be positive and sample_stride >= 1")


@dataclass
class Trajectory:
    """Sampled solution with per-sample diagnostics.

    energy is the Legendre energy, diss_power the dissipation function
    along the path, balance_defect the pointwise |dE/dt + Q| estimated
    by central differencing (diagnostic only).  truncated marks runs the
    integrator stopped before t_end, with failure naming the reason.
    """

    times: np.ndarray
    xs: np.ndarray
    vs: np.ndarray
    accels: np.ndarray
    energy: np.ndarray
    diss_power: np.ndarray
    balance_defect: np.ndarray
    truncated: bool = False
    failure: Optional[str] = None
    labels: tuple[str, ...] = field(default=())

    @property
    def states(self):
        return [State(self.xs[k], self.vs[k], self.times[k]) for k in range(len(self.times))]

    def dissipated_energy(self) -> float:
        """Integral of the dissipation power over the stored samples
        (composite Simpson on the uniform grid, trapezoid tail)."""
        return _simpson(self.diss_power, self.times)


def _simpson(y: np.ndarray, t: np.ndarray) -> float:
    n = len(t)
    if n < 2:
        return 0.0
    h = np.diff(t)
    if n < 3 or not np.allclose(h, h[0], rtol=1e-9, atol=0.0):
        return float(np.trapezoid(y, t))
    h0 = h[0]
    m = n - 1 if (n - 1) % 2 == 0 else n - 2
    total = 0.0
    if m >= 2:
        total += h0 / 3.0 * (
            y[0] + y[m] + 4.0 * np.sum(y[1:m:2]) + 2.0 * np.sum(y[2:m:2])
        )
    if m != n - 1:  # odd interval count: trapezoid on the last one
        total += 0.5 * h0 * (y[-2] + y[-1])
    return float(total)


def _balance_series(times, energy, diss_power):
    n = len(times)
    out = np.zeros(n)
    if n < 3:
        return out
    dt2 = times[2:] - times[:-2]
    out[1:-1] = np.abs((energy[2:] - energy[:-2]) / dt2 + diss_power[1:-1])
    out[0] = np.abs((energy[1] - energy[0]) / (times[1] - times[0]) + diss_power[0])
    out[-1] = np.abs((energy[-1] - energy[-2]) / (times[-1] - times[-2]) + diss_power[-1])
    return out


class _Recorder:
    def __init__(self, model, labels):
        self.model = model
        self.times, self.xs, self.vs, self.accels = [], [], [], []
        self.energy, self.diss = [], []
        self.labels = labels

    def add(self, t, x, v, a, e, qp):
        self.times.append(t)
        self.xs.append(x.copy())
        self.vs.append(v.copy())
        self.accels.append(a.copy())
        self.energy.append(e)
        self.diss.append(qp)

    def build(self, truncated, failure):
        times = np.array(self.times)
        energy = np.array(self.energy)
        diss = np.array(self.diss)
        return Trajectory(
            times=times,
            xs=np.array(self.xs),
            vs=np.array(self.vs),
            accels=np.array(self.accels),
            energy=energy,
            diss_power=diss,
            balance_defect=_balance_series(times, energy, diss),
            truncated=truncated,
            failure=failure,
            labels=self.labels,
        )


def integrate(
    model: SystemModel, s0: State, t_end: float, options: IntegratorOptions = IntegratorOptions()
) -> Trajectory:
    """Integrate the balance from s0 to t_end.

    Mid-trajectory failures (degenerate mass matrix, singular
    dissipation, non-finite values, tripped balance guard) return the
    trajectory up to the last valid state, marked truncated.  Step-size
    underflow in rkf45 raises :class:`StepSizeUnderflow` with the
    partial trajectory attached.
    """
    if t_end < s0.t:
        raise ValueError(f"t_end={t_end} precedes s0.t={s0.t}")

    def accel(t, x, v):
        return solve_acceleration(model, State(x, v, t))

    def audit(t, x, v):
        s = State(x, v, t)
        return legendre_energy(model, s), ad.value(model.Q, s.x, s.v, s.t)

    rec = _Recorder(model, model.labels)
    t, x, v = s0.t, s0.x.copy(), s0.v.copy()
    a = accel(t, x, v)  # precondition: the solve must succeed at s0
    e, qp = audit(t, x, v)
    rec.add(t, x, v, a, e, qp)

    if options.method == "rk4":
        return _run_rk4(accel, audit, rec, t, x, v, a, e, qp, t_end, options)
    return _run_rkf45(accel, audit, rec, t, x, v, a, e, qp, t_end, options)


def _rk4_step(accel, t, x, v, a, dt):
    k1x, k1v = v, a
    k2v = accel(t + 0.5 * dt, x + 0.5 * dt * k1x, v + 0.5 * dt * k1v)
    k2x = v + 0.5 * dt * k1v
    k3v = accel(t + 0.5 * dt, x + 0.5 * dt * k2x, v + 0.5 * dt * k2v)
    k3x = v + 0.5 * dt * k2v
    k4v = accel(t + dt, x + dt * k3x, v + dt * k3v)
    k4x = v + dt * k3v
    xn = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    vn = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return xn, vn


def _run_rk4(accel, audit, rec, t, x, v, a, e, qp, t_end, opt):
    # uniform steps that land exactly on t_end (dt adjusted by < half a step)
    n_steps = max(1, int(round((t_end - t) / opt.dt))) if t_end > t else 0
    dt = (t_end - t) / n_steps if n_steps else opt.dt
    truncated, failure = False, None
    t0 = t
    for k in range(n_steps):
        tn = t0 + (k + 1) * dt
        try:
            xn, vn = _rk4_step(accel, t, x, v, a, dt)
            an = accel(tn, xn, vn)
        except TepdynError as err:
            truncated, failure = True, f"{type(err).__name__}: {err}"
            break
        if not (np.all(np.isfinite(xn)) and np.all(np.isfinite(vn))):
            truncated, failure = True, "non-finite state"
            break
        en, qpn = audit(tn, xn, vn)
        if opt.balance_guard is not None:
            defect = en - e + 0.5 * dt * (qp + qpn)
            if abs(defect) > opt.balance_guard * (1.0 + abs(e)):
                truncated = True
                failure = f"balance guard tripped (per-step defect {defect:.3e})"
                break
        t, x, v, a, e, qp = tn, xn, vn, an, en, qpn
        if (k + 1) % opt.sample_stride == 0 or k == n_steps - 1:
            rec.add(t, x, v, a, e, qp)
    return rec.build(truncated, failure)


# Fehlberg 4(5) tableau
_RKF_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8, 3680 / 513, -845 / 4104),
    (-8 / 27, 2, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_RKF_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_RKF_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
_RKF_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)


def _run_rkf45(accel, audit, rec, t, x, v, a, e, qp, t_end, opt):
    n = x.size
    y = np.concatenate([x, v])

    def f(tt, yy):
        return np.concatenate([yy[n:], accel(tt, yy[:n], yy[n:])])

    dt = opt.dt
    truncated, failure = False, None
    steps = 0
    stride_count = 0
    while t < t_end - 1e-14 * max(1.0, abs(t_end)):
        if steps >= opt.max_steps:
            truncated, failure = True, "step budget exhausted"
            break
        dt = min(dt, t_end - t)
        if dt < opt.min_dt:
            raise StepSizeUnderflow(
                f"step size {dt} underflowed at t={t}; problem too stiff "
                "for the explicit pair",
                trajectory=rec.build(True, "step-size underflow"),
            )
        try:
            ks = []
            for i in range(6):
                yi = y.copy()
                for j, aij in enumerate(_RKF_A[i]):
                    yi += dt * aij * ks[j]
                ks.append(f(t + _RKF_C[i] * dt, yi))
            y5 = y + dt * sum(b * k for b, k in zip(_RKF_B5, ks))
            y4 = y + dt * sum(b * k for b, k in zip(_RKF_B4, ks))
        except TepdynError as err:
            truncated, failure = True, f"{type(err).__name__}: {err}"
            break
        steps += 1
        err_norm = float(np.linalg.norm(y5 - y4))
        tol = opt.abs_tol + opt.rel_tol * float(np.linalg.norm(y))
        if not np.all(np.isfinite(y5)) or err_norm > tol:
            shrink = 0.5 if not np.all(np.isfinite(y5)) else max(
                0.1, 0.9 * (tol / err_norm) ** 0.2
            )
            dt *= shrink
            continue
        tn = t + dt
        en, qpn = audit(tn, y4[:n], y4[n:])
        if opt.balance_guard is not None:
            defect = en - e + 0.5 * dt * (qp + qpn)
            if abs(defect) > opt.balance_guard * (1.0 + abs(e)):
                truncated = True
                failure = f"balance guard tripped (per-step defect {defect:.3e})"
                break
        y, t, e, qp = y4, tn, en, qpn  # propagate the 4th-order solution
        stride_count += 1
        if stride_count % opt.sample_stride == 0 or t >= t_end - 1e-14:
            try:
                an = accel(t, y[:n], y[n:])
            except TepdynError as err:
                truncated, failure = True, f"{type(err).__name__}: {err}"
                break
            rec.add(t, y[:n], y[n:], an, e, qp)
        if err_norm > 0.0:
            dt = min(dt * min(5.0, 0.9 * (tol / err_norm) ** 0.2), t_end - t + dt)
        else:
            dt *= 2.0
    return rec.build(truncated, failure)
