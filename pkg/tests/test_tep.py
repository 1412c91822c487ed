"""Dissipative-force construction tests.

The force is q = [Q / (dQ/dv . v)] dQ/dv, the maximizer of the
dissipation under the power constraint; every test below pins either a
hand-computed value or one of its exact identities.
"""

import math

import numpy as np
import pytest

from tepdyn.autodiff import ScalarField
from tepdyn.errors import SingularDissipation
from tepdyn.model import State
from tepdyn.tep import (
    dissipative_force,
    homogeneity_degree,
    norton_hoff_field,
    verify_power_identity,
)


def field_1d(fn):
    return ScalarField(lambda x, v, t: fn(v[0]), 1, 1)


class TestHandValues:
    def test_quadratic_force(self):
        # Q = 0.5 v^2: dQ/dv = v, denominator v^2, q = (0.5 v^2 / v^2) v
        # = v/2; at v=4 the force is 2.
        f = dissipative_force(field_1d(lambda v: 0.5 * v * v), State([0.0], [4.0]))
        assert math.isclose(f.q[0], 2.0, rel_tol=1e-15)
        assert math.isclose(f.power, 0.5 * 16.0, rel_tol=1e-15)

    def test_viscous_drag_force(self):
        # Q = eta v^2 gives q = eta v.
        eta = 0.7
        f = dissipative_force(field_1d(lambda v: eta * v * v), State([0.0], [3.0]))
        assert math.isclose(f.q[0], eta * 3.0, rel_tol=1e-15)

    def test_quartic_force(self):
        # Q = v^4 (degree 4): q = Q/(4 v^4) * 4 v^3 = v^3; at v=2, q=8.
        f = dissipative_force(field_1d(lambda v: v ** 4), State([0.0], [2.0]))
        assert math.isclose(f.q[0], 8.0, rel_tol=1e-14)


class TestNortonHoffClosedForm:
    @pytest.mark.parametrize("m_exp", [1.5, 2.0, 3.0])
    @pytest.mark.parametrize("n_dim", [1, 3, 6])
    def test_matches_power_law(self, m_exp, n_dim):
        alpha = 2.2
        Q = norton_hoff_field(alpha, m_exp, n_dim)
        rng = np.random.Generator(np.random.Philox(key=11))
        for _ in range(50):
            v = rng.uniform(-5.0, 5.0, n_dim)
            if np.linalg.norm(v) < 1e-3:
                continue
            s = State(np.zeros(n_dim), v)
            q = dissipative_force(Q, s).q
            closed = alpha * np.linalg.norm(v) ** (m_exp - 2.0) * v
            assert np.max(np.abs(q - closed)) <= 1e-10 * (1.0 + np.max(np.abs(closed)))

    def test_invalid_parameters_rejected(self):
        with pytest.raises(ValueError):
            norton_hoff_field(0.0, 2.0, 1)
        with pytest.raises(ValueError):
            norton_hoff_field(1.0, 1.0, 1)


class TestHomogeneity:
    def test_degrees(self):
        s = State([0.5], [1.3])
        assert homogeneity_degree(field_1d(lambda v: v * v), s) == pytest.approx(2.0)
        assert homogeneity_degree(field_1d(lambda v: v ** 4), s) == pytest.approx(4.0)

    def test_inhomogeneous_returns_none(self):
        s = State([0.5], [1.3])
        assert homogeneity_degree(field_1d(lambda v: v * v + v ** 4), s) is None


class TestEdgeCases:
    def test_quiescent_state_gives_zero_force(self):
        f = dissipative_force(field_1d(lambda v: v * v), State([1.0], [0.0]))
        assert f.q[0] == 0.0 and f.power == 0.0

    def test_singular_denominator_raises(self):
        # Q positive but rate-independent near the sample: the power
        # constraint cannot be met and the construction must refuse.
        Q = ScalarField(lambda x, v, t: 1.0 + 0.0 * v[0], 1, 1)
        with pytest.raises(SingularDissipation):
            dissipative_force(Q, State([0.0], [2.0]))


class TestPowerIdentity:
    def test_identity_over_seeded_states(self):
        Q = norton_hoff_field(1.3, 3.0, 3)
        rng = np.random.Generator(np.random.Philox(key=13))
        states = [
            State(rng.uniform(-2, 2, 3), rng.uniform(-5, 5, 3)) for _ in range(1000)
        ]
        rep = verify_power_identity(Q, states, tolerance=1e-12)
        assert rep.passed and rep.n_samples == 1000

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            verify_power_identity(norton_hoff_field(1.0, 2.0, 1), [])
