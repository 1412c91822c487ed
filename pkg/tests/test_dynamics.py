"""Force balance, acceleration solve and integrator tests.

Closed-form references used here (derived by hand, independent of the
engine):

* damped oscillator  m xdd + eta xd + k x = 0 from (x0, 0):
  x(t) = x0 e^(-g t) (cos wd t + g/wd sin wd t), g = eta/2m,
  wd = sqrt(k/m - g^2)
* pure decay (k = 0): v(t) = v0 e^(-eta t / m)
* disk damper equation of motion:
  2 r^2 m (1+sin phi) phidd + r^2 m cos(phi) phid^2
  + r^2 eta (1+cos phi)^2 phid + r m g cos(phi) = 0
"""

import math

import numpy as np
import pytest

from tepdyn.autodiff import ScalarField
from tepdyn.dynamics import (
    IntegratorOptions,
    integrate,
    legendre_energy,
    residual,
    solve_acceleration,
    variational_derivative_K,
)
from tepdyn.errors import DegenerateMass
from tepdyn.model import State, build_disk_damper, build_rayleigh_oscillator


def disk_oracle_lhs(phi, phidot, phiddot, m, r, eta, g):
    return (
        2.0 * r * r * m * (1.0 + np.sin(phi)) * phiddot
        + r * r * m * np.cos(phi) * phidot * phidot
        + r * r * eta * (1.0 + np.cos(phi)) ** 2 * phidot
        + r * m * g * np.cos(phi)
    )


class TestForceBalance:
    def test_variational_derivative_quadratic_kinetic(self):
        # K = 0.5 m v^2 gives D_K = m a; m=3, a=1 -> 3.
        K = ScalarField(lambda x, v, t: 1.5 * v[0] * v[0], 1, 1)
        s = State([0.7], [2.0])
        got = variational_derivative_K(K, s, np.array([1.0]))
        assert math.isclose(got[0], 3.0, rel_tol=1e-14)

    def test_residual_matches_disk_oracle(self):
        params = dict(m=1.0, r=1.0, eta=0.7, g=9.81)
        model = build_disk_damper(**params)
        s = State([0.4], [-1.3])
        a = np.array([2.6])
        dec = residual(model, s, a)
        lhs = disk_oracle_lhs(0.4, -1.3, 2.6, **params)
        assert abs(dec.residual[0] - lhs) <= 1e-12 * (1.0 + abs(lhs))

    def test_acceleration_at_rest(self):
        # At (phi, phid) = (0, 0): 2 m r^2 a + m g r = 0 -> a = -g/2.
        model = build_disk_damper(m=1.0, r=1.0, eta=0.7, g=9.81)
        a = solve_acceleration(model, State([0.0], [0.0]))
        assert math.isclose(a[0], -4.905, rel_tol=1e-15)

    def test_solved_acceleration_zeroes_residual(self):
        model = build_disk_damper(m=1.0, r=1.0, eta=0.7, g=9.81)
        rng = np.random.Generator(np.random.Philox(key=17))
        for _ in range(200):
            phi = rng.uniform(-math.pi, math.pi)
            if abs(phi + math.pi / 2.0) < 0.1:
                continue
            s = State([phi], [rng.uniform(-10, 10)])
            a = solve_acceleration(model, s)
            res = residual(model, s, a).residual
            assert np.max(np.abs(res)) <= 1e-9 * (1.0 + abs(a[0]))

    def test_degenerate_mass_raises(self):
        model = build_disk_damper(m=1.0, r=1.0, eta=0.7, g=9.81)
        with pytest.raises(DegenerateMass):
            solve_acceleration(model, State([-math.pi / 2.0], [1.0]))

    def test_legendre_energy_quadratic_kinetic(self):
        # For K quadratic in v, E = K + G; oscillator at (1.5, -2):
        # K = 4, G = 9 (m=2, k=8).
        model = build_rayleigh_oscillator(m=2.0, k=8.0, eta=0.5)
        e = legendre_energy(model, State([1.5], [-2.0]))
        assert math.isclose(e, 13.0, rel_tol=1e-15)


class TestClosedFormTrajectories:
    def test_undamped_oscillator_period(self):
        # m=1, k=4 -> omega=2, period pi; x(pi) = x(0) = 1.
        model = build_rayleigh_oscillator(m=1.0, k=4.0, eta=0.0)
        traj = integrate(
            model, State([1.0], [0.0]), math.pi,
            IntegratorOptions(method="rk4", dt=1e-3),
        )
        assert not traj.truncated
        assert abs(traj.xs[-1, 0] - 1.0) <= 1e-10
        assert abs(traj.times[-1] - math.pi) <= 1e-12

    def test_pure_decay(self):
        # k=0, m=1, eta=1: v(1) = e^-1.
        model = build_rayleigh_oscillator(m=1.0, k=0.0, eta=1.0)
        traj = integrate(
            model, State([0.0], [1.0]), 1.0, IntegratorOptions(method="rk4", dt=1e-3)
        )
        assert abs(traj.vs[-1, 0] - math.exp(-1.0)) <= 1e-12

    def test_damped_oscillator_ten_periods(self):
        m, k, eta = 1.0, 4.0, 0.5
        model = build_rayleigh_oscillator(m=m, k=k, eta=eta)
        gam = eta / (2.0 * m)
        wd = math.sqrt(k / m - gam * gam)
        t_end = 10.0 * 2.0 * math.pi / wd
        traj = integrate(
            model, State([1.0], [0.0]), t_end,
            IntegratorOptions(method="rk4", dt=1e-3, sample_stride=10),
        )
        exact = np.exp(-gam * traj.times) * (
            np.cos(wd * traj.times) + gam / wd * np.sin(wd * traj.times)
        )
        assert np.max(np.abs(traj.xs[:, 0] - exact)) <= 1e-7

    def test_rkf45_matches_closed_form(self):
        model = build_rayleigh_oscillator(m=1.0, k=1.0, eta=0.0)
        traj = integrate(
            model, State([1.0], [0.0]), 2.0 * math.pi,
            IntegratorOptions(method="rkf45", abs_tol=1e-10, rel_tol=1e-10),
        )
        assert not traj.truncated
        assert abs(traj.xs[-1, 0] - 1.0) <= 1e-7


class TestEnergyBookkeeping:
    def test_damped_disk_balance_on_guarded_span(self):
        model = build_disk_damper(m=1.0, r=1.0, eta=0.7, g=9.81)
        traj = integrate(
            model, State([0.0], [0.0]), 10.0,
            IntegratorOptions(method="rk4", dt=1e-3, balance_guard=1e-7),
        )
        # The disk creeps into the coordinate degeneracy at phi=-pi/2,
        # so the guard cuts the run; on the returned span the first law
        # must hold tightly.
        assert traj.truncated and "balance guard" in traj.failure
        d_e = traj.energy[-1] - traj.energy[0]
        assert abs(d_e + traj.dissipated_energy()) <= 1e-6 * abs(d_e)
        assert np.max(np.diff(traj.energy)) <= 0.0

    def test_dissipated_energy_positive(self):
        model = build_rayleigh_oscillator(m=1.0, k=4.0, eta=0.5)
        traj = integrate(
            model, State([1.0], [0.0]), 5.0, IntegratorOptions(method="rk4", dt=1e-3)
        )
        assert traj.dissipated_energy() > 0.0


class TestDeterminism:
    def test_repeated_runs_bit_identical(self):
        model = build_disk_damper(m=1.0, r=1.0, eta=0.7, g=9.81)
        opts = IntegratorOptions(method="rk4", dt=1e-3, balance_guard=1e-7)
        t1 = integrate(model, State([0.0], [0.0]), 2.0, opts)
        t2 = integrate(model, State([0.0], [0.0]), 2.0, opts)
        assert np.array_equal(t1.xs, t2.xs)
        assert np.array_equal(t1.energy, t2.energy)
        assert t1.times[-1] == t2.times[-1]


class TestOptionsValidation:
    def test_bad_method_rejected(self):
        with pytest.raises(ValueError):
            IntegratorOptions(method="euler")

    def test_bad_dt_rejected(self):
        with pytest.raises(ValueError):
            IntegratorOptions(dt=0.0)

    def test_t_end_before_start_rejected(self):
        model = build_rayleigh_oscillator(m=1.0, k=1.0, eta=0.0)
        with pytest.raises(ValueError):
            integrate(model, State([1.0], [0.0], t=5.0), 1.0)
