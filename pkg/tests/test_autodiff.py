"""Dual-number forward-mode differentiation tests.

Hand-worked derivative values are frozen in as literals; random smooth
fields are cross-checked against central finite differences with a
seeded counter-based generator.
"""

import math

import numpy as np
import pytest

from tepdyn import autodiff as ad
from tepdyn.autodiff import Dual, ScalarField
from tepdyn.errors import DimensionMismatch

FD_H = 1e-6


def fd_grad(fn, z):
    g = np.empty_like(z)
    for i in range(z.size):
        zp, zm = z.copy(), z.copy()
        zp[i] += FD_H
        zm[i] -= FD_H
        g[i] = (fn(zp) - fn(zm)) / (2.0 * FD_H)
    return g


def fd_jac(fn, z):
    cols = []
    for i in range(z.size):
        zp, zm = z.copy(), z.copy()
        zp[i] += FD_H
        zm[i] -= FD_H
        cols.append((fn(zp) - fn(zm)) / (2.0 * FD_H))
    return np.column_stack(cols)


class TestDualArithmetic:
    def test_mul_second_derivative(self):
        # f(u) = u^2 along direction d=1 at u=3: f=9, f'=6, f''=2
        u = Dual(3.0, 1.0, 0.0)
        p = u * u
        assert (p.v, p.d, p.dd) == (9.0, 6.0, 2.0)

    def test_division_quotient_rule(self):
        # f(u) = 1/u at u=2, d=1: f=0.5, f'=-0.25, f''=0.25
        r = 1.0 / Dual(2.0, 1.0, 0.0)
        assert math.isclose(r.v, 0.5, rel_tol=0, abs_tol=1e-15)
        assert math.isclose(r.d, -0.25, rel_tol=0, abs_tol=1e-15)
        assert math.isclose(r.dd, 0.25, rel_tol=0, abs_tol=1e-15)

    def test_sin_chain(self):
        # f(u) = sin(u^2) at u=1: f' = 2 cos 1, f'' = 2 cos 1 - 4 sin 1
        u = Dual(1.0, 1.0, 0.0)
        s = ad.sin(u * u)
        assert math.isclose(s.d, 2.0 * math.cos(1.0), rel_tol=1e-15)
        assert math.isclose(s.dd, 2.0 * math.cos(1.0) - 4.0 * math.sin(1.0), rel_tol=1e-14)

    def test_pow_fractional(self):
        # f(u) = u^1.5 at u=4: f=8, f'=3, f''=0.375
        p = Dual(4.0, 1.0, 0.0) ** 1.5
        assert math.isclose(p.v, 8.0, rel_tol=1e-15)
        assert math.isclose(p.d, 3.0, rel_tol=1e-15)
        assert math.isclose(p.dd, 0.375, rel_tol=1e-14)

    def test_zero_seed_is_bit_exact_passthrough(self):
        # A dual with zero seeds must reproduce plain float arithmetic
        # bit for bit through +, -, *.
        a, b = 0.1, 0.7
        da, db = Dual(a, 0.0, 0.0), Dual(b, 0.0, 0.0)
        assert (da + db).v == a + b
        assert (da - db).v == a - b
        assert (da * db).v == a * b

    def test_comparisons_use_value(self):
        assert Dual(1.0, 5.0, 5.0) < Dual(2.0, -5.0, -5.0)
        assert Dual(3.0, 0.0, 0.0) > 2.5

    def test_abs_one_sided(self):
        n = abs(Dual(-2.0, 1.0, 0.0))
        assert (n.v, n.d) == (2.0, -1.0)


def quad_field():
    # f = x0^2 v0 + sin(x0) + v0^3
    def body(x, v, t):
        return x[0] * x[0] * v[0] + ad.sin(x[0]) + v[0] ** 3

    return ScalarField(body, 1, 1)


class TestScalarFieldDerivatives:
    def test_grad_frozen_example(self):
        # At x=2, v=3: df/dx = 2*2*3 + cos 2 = 12 + cos 2; df/dv = 4 + 27
        f = quad_field()
        x, v = np.array([2.0]), np.array([3.0])
        assert math.isclose(ad.grad_x(f, x, v, 0.0)[0], 12.0 + math.cos(2.0), rel_tol=1e-15)
        assert math.isclose(ad.grad_v(f, x, v, 0.0)[0], 31.0, rel_tol=1e-15)

    def test_hessian_blocks_frozen_example(self):
        # d2f/dv2 = 6v = 18; d2f/dvdx = 2x = 4
        f = quad_field()
        x, v = np.array([2.0]), np.array([3.0])
        assert math.isclose(ad.hess_vv(f, x, v, 0.0)[0, 0], 18.0, rel_tol=1e-14)
        assert math.isclose(ad.hess_vx(f, x, v, 0.0)[0, 0], 4.0, rel_tol=1e-14)

    def test_time_partial(self):
        f = ScalarField(lambda x, v, t: t * t * x[0], 1, 1, has_time=True)
        got = ad.time_partial(f, np.array([3.0]), np.array([0.0]), 2.0)
        assert math.isclose(got, 12.0, rel_tol=1e-15)

    def test_dimension_mismatch_rejected(self):
        f = quad_field()
        with pytest.raises(DimensionMismatch):
            ad.value(f, np.array([1.0, 2.0]), np.array([1.0]), 0.0)

    def test_hess_vv_symmetric(self):
        def body(x, v, t):
            return v[0] * v[0] * v[1] + ad.exp(v[2]) * v[0] + x[0] * v[1] * v[2]

        f = ScalarField(body, 1, 3)
        h = ad.hess_vv(f, np.array([0.4]), np.array([1.0, -2.0, 0.3]), 0.0)
        assert np.array_equal(h, h.T)


def random_field(rng, n):
    cx = rng.uniform(-1.0, 1.0, n)
    cv = rng.uniform(-1.0, 1.0, n)
    cq = rng.uniform(0.2, 1.5, n)
    cm = rng.uniform(-0.5, 0.5, n)
    wx = rng.uniform(0.5, 2.0, n)

    def body(x, v, t):
        acc = 0.0
        for i in range(n):
            acc = acc + cx[i] * x[i] + cv[i] * v[i] ** 3 + cq[i] * v[i] * v[i]
            acc = acc + cm[i] * x[i] * v[i] + 0.3 * ad.sin(wx[i] * x[i]) * v[i]
            acc = acc + 0.1 * ad.exp(0.2 * x[i]) * ad.cos(0.7 * v[i])
        return acc

    return ScalarField(body, n, n)


class TestAgainstFiniteDifferences:
    def test_random_fields_match_central_differences(self):
        rng = np.random.Generator(np.random.Philox(key=424242))
        for _ in range(100):
            n = int(rng.integers(1, 4))
            f = random_field(rng, n)
            x = rng.uniform(-2.0, 2.0, n)
            v = rng.uniform(-2.0, 2.0, n)
            checks = [
                (ad.grad_x(f, x, v, 0.0), fd_grad(lambda z: ad.value(f, z, v, 0.0), x)),
                (ad.grad_v(f, x, v, 0.0), fd_grad(lambda z: ad.value(f, x, z, 0.0), v)),
                (ad.hess_vv(f, x, v, 0.0), fd_jac(lambda z: ad.grad_v(f, x, z, 0.0), v)),
                (ad.hess_vx(f, x, v, 0.0), fd_jac(lambda z: ad.grad_v(f, z, v, 0.0), x)),
            ]
            for exact, approx in checks:
                scale = 1.0 + np.max(np.abs(exact))
                assert np.max(np.abs(exact - approx)) <= 1e-6 * scale
