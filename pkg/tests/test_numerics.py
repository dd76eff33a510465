import numpy as np
import pytest

from pastel.errors import SingularMatrix
from pastel.numerics import finite_diff_check, solve_linear


class TestSolveLinear:
    def test_identity(self, rng):
        b = rng.standard_normal((3, 2))
        assert np.allclose(solve_linear(np.eye(3), b), b, atol=0)

    def test_2x2_closed_form(self):
        # det = 1 - 0.85^2 = 0.2775
        a = np.array([[1.0, -0.85], [-0.85, 1.0]])
        b = np.array([[1.0], [0.0]])
        x = solve_linear(a, b)
        assert x[0, 0] == pytest.approx(1.0 / 0.2775, abs=1e-10)
        assert x[1, 0] == pytest.approx(0.85 / 0.2775, abs=1e-10)
        assert x[0, 0] == pytest.approx(3.6036, abs=1e-4)
        assert x[1, 0] == pytest.approx(3.0631, abs=1e-4)

    def test_zero_matrix_is_singular(self):
        with pytest.raises(SingularMatrix):
            solve_linear(np.zeros((2, 2)), np.array([[1.0], [0.0]]))

    def test_residual_on_random_well_conditioned_systems(self, rng):
        for _ in range(20):
            a = rng.standard_normal((10, 10)) + 10.0 * np.eye(10)
            b = rng.standard_normal((10, 3))
            x = solve_linear(a, b)
            residual = np.abs(a @ x - b).max()
            assert residual <= 1e-8 * (1.0 + np.abs(b).max())


class TestFiniteDiffCheck:
    def test_quadratic_correct_gradient(self):
        params = {"w": np.array([3.0])}
        err = finite_diff_check(
            lambda p: float(p["w"][0] ** 2), params, {"w": np.array([6.0])}
        )
        assert err < 1e-6

    def test_quadratic_wrong_gradient(self):
        params = {"w": np.array([3.0])}
        err = finite_diff_check(
            lambda p: float(p["w"][0] ** 2), params, {"w": np.array([5.0])}
        )
        # central difference is exactly 6; mismatch against claimed 5
        assert err == pytest.approx(1.0 / 6.0, abs=1e-3)

    def test_constant_function_needs_zero_gradient(self):
        params = {"w": np.array([1.0, -2.0])}
        assert finite_diff_check(lambda p: 4.2, params, {"w": np.zeros(2)}) < 1e-8
        err = finite_diff_check(lambda p: 4.2, params, {"w": np.array([0.5, 0.0])})
        assert err > 0.9  # any nonzero claim fails the tolerance by far

    def test_multi_parameter_dict(self, rng):
        a = rng.standard_normal((2, 2))
        b = rng.standard_normal(3)

        def f(p):
            return float(np.sum(p["a"] ** 3) + np.dot(p["b"], b))

        grads = {"a": 3.0 * a**2, "b": b.copy()}
        assert finite_diff_check(f, {"a": a, "b": b}, grads) < 1e-7
