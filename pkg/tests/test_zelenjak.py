import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from csf3d import zelenjak
from csf3d.errors import InvalidArgumentError, InvalidFrameError
from csf3d.zelenjak import PointFrame

E1, E2, E3 = np.eye(3)

# symbolic oracle: F(xi, eta) = |eta| exp(-|xi|^2/4); the gradient vector
# contracts the xi index of the mixed derivative with eta
_xi = sp.symbols("x0:3", real=True)
_eta = sp.symbols("e0:3", real=True)
_F = sp.sqrt(sum(e**2 for e in _eta)) * sp.exp(-sum(x**2 for x in _xi) / 4)
_hess = sp.lambdify(_xi + _eta, sp.hessian(_F, _eta), "numpy")
_grad_vec = sp.lambdify(
    _xi + _eta,
    sp.Matrix(
        [sp.diff(_F, _xi[i]) - sum(sp.diff(_F, _xi[j], _eta[i]) * _eta[j] for j in range(3)) for i in range(3)]
    ),
    "numpy",
)


def nonzero(v):
    return np.linalg.norm(v) > 0.1


vecs = st.lists(st.floats(-3, 3), min_size=3, max_size=3).map(np.array)


class TestWeight:
    def test_unit(self):
        assert zelenjak.weight_F(np.zeros(3), E1) == 1.0

    def test_value(self):
        assert zelenjak.weight_F(2 * E1, 3 * E2) == pytest.approx(3 * math.exp(-1), rel=1e-15)
        assert zelenjak.weight_F(2 * E1, 3 * E2) == pytest.approx(1.10364, abs=1e-5)

    def test_zero_eta(self):
        with pytest.raises(InvalidArgumentError):
            zelenjak.weight_F(np.zeros(3), np.zeros(3))

    def test_shape(self):
        with pytest.raises(InvalidArgumentError):
            zelenjak.weight_F(np.zeros(2), E1)


class TestHessian:
    def test_basic_point(self):
        np.testing.assert_allclose(zelenjak.hessian_closed_form(np.zeros(3), E1), np.diag([0.0, 1.0, 1.0]), atol=1e-15)
        assert zelenjak.hessian_identity_check(np.zeros(3), E1) <= 1e-7

    @given(vecs, vecs.filter(nonzero))
    def test_closed_form_matches_symbolic(self, xi, eta):
        expected = np.array(_hess(*xi, *eta), dtype=float)
        np.testing.assert_allclose(zelenjak.hessian_closed_form(xi, eta), expected, rtol=1e-12, atol=1e-14)

    @given(vecs, vecs.filter(nonzero))
    def test_eta_is_null_direction(self, xi, eta):
        assert np.max(np.abs(zelenjak.hessian_closed_form(xi, eta) @ eta)) <= 1e-12

    def test_second_order_in_step(self):
        xi, eta = np.array([0.5, -1.0, 0.3]), np.array([0.8, 0.4, -0.6])
        coarse = zelenjak.hessian_identity_check(xi, eta, h=1e-2)
        fine = zelenjak.hessian_identity_check(xi, eta, h=5e-3)
        assert coarse / fine == pytest.approx(4.0, rel=0.05)


class TestGradientVector:
    @given(vecs.filter(nonzero))
    def test_zero_xi(self, eta):
        np.testing.assert_allclose(zelenjak.gradient_vector_closed_form(np.zeros(3), eta), 0.0, atol=1e-15)
        assert zelenjak.gradient_vector_identity(np.zeros(3), eta) <= 1e-9

    @pytest.mark.parametrize("scale", [-2.0, 0.5, 1.5])
    def test_tangential_xi(self, scale):
        eta = np.array([0.6, -0.8, 0.5])
        np.testing.assert_allclose(zelenjak.gradient_vector_closed_form(scale * eta, eta), 0.0, atol=1e-15)
        assert np.max(np.abs(zelenjak.gradient_vector_fd(scale * eta, eta))) <= 1e-7

    @given(vecs, vecs.filter(nonzero))
    def test_closed_form_matches_symbolic(self, xi, eta):
        expected = np.array(_grad_vec(*xi, *eta), dtype=float).ravel()
        np.testing.assert_allclose(zelenjak.gradient_vector_closed_form(xi, eta), expected, rtol=1e-10, atol=1e-14)


def frame(xi, eta, nu, gamma):
    return PointFrame(np.asarray(xi, float), np.asarray(eta, float), np.asarray(nu, float), np.asarray(gamma, float))


class TestInequalityGap:
    def test_binormal_point(self):
        f = frame(E3, 2 * E1, E2, E3)
        rho = zelenjak.weight_F(E3, 2 * E1)
        lhs, rhs, gap = zelenjak.inequality_gap(f)
        assert lhs == pytest.approx(0.0, abs=1e-16)
        assert rhs == pytest.approx(-rho / 4, rel=1e-14)
        assert gap == pytest.approx(rho / 4, rel=1e-14)

    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_equality_in_osculating_plane(self, a, b):
        _, _, gap = zelenjak.inequality_gap(frame(a * E2 + b * E1, 1.3 * E1, E2, E3))
        assert abs(gap) <= 1e-14

    @given(st.integers(0, 2**32 - 1))
    def test_gap_is_binormal_square(self, seed):
        f = zelenjak.random_frame(np.random.default_rng(seed))
        rho = zelenjak.weight_F(f.xi, f.eta)
        _, _, gap = zelenjak.inequality_gap(f)
        assert gap >= 0
        assert abs(gap - rho / 4 * f.xi.dot(f.gamma) ** 2) <= 1e-12 * rho

    @pytest.mark.parametrize(
        "args",
        [
            (E1, E1, E1, E3),  # nu parallel to eta
            (E1, E1, E2, E2),  # nu parallel to gamma
            (E1, E1, 2 * E2, E3),  # nu not unit
            (E1, np.zeros(3), E2, E3),  # eta zero
            (E1, E1, E2, E3 + 1e-9 * E1),  # gamma slightly off
        ],
    )
    def test_invalid_frames(self, args):
        with pytest.raises(InvalidFrameError):
            frame(*args)


class TestPythagoras:
    def test_zero(self):
        assert zelenjak.pythagoras_check(np.zeros(3), frame(E1, E1, E2, E3)) == 0.0

    def test_basis_vector(self):
        f = frame(E2, 0.7 * E1, E2, E3)
        assert zelenjak.pythagoras_check(f.nu, f) <= 1e-14

    def test_many_random_frames(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(1000):
            f = zelenjak.random_frame(rng)
            worst = max(worst, zelenjak.pythagoras_check(f.xi, f) / max(1.0, f.xi.dot(f.xi)))
        assert worst <= 1e-12


class TestSamplers:
    def test_domain(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            f = zelenjak.random_frame(rng)
            assert np.linalg.norm(f.xi) <= 3.0
            assert 0.5 <= np.linalg.norm(f.eta) <= 2.0

    def test_seeded(self):
        a = zelenjak.random_frame(np.random.default_rng(9))
        b = zelenjak.random_frame(np.random.default_rng(9))
        np.testing.assert_array_equal(a.xi, b.xi)
        np.testing.assert_array_equal(a.gamma, b.gamma)


class TestRunChecks:
    def test_default_suite_passes(self):
        report = zelenjak.run_checks(100, 42)
        assert report["ok"], report
        assert report["gap_min"] >= 0

    def test_deterministic(self):
        assert zelenjak.run_checks(1, 5) == zelenjak.run_checks(1, 5)

    def test_zero_tolerance_fails(self):
        report = zelenjak.run_checks(3, 5, {"hessian": 0.0})
        assert not report["ok"] and not report["passed"]["hessian"]
        assert report["passed"]["pythagoras"]
