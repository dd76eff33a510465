import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import transport_vertex_enumeration
from pastel.errors import InfeasibleTransport, InvalidParams
from pastel.transport import DiscreteMeasure, transport_cost, wasserstein1

# hop distances on a 5-cycle: a genuine metric space for property tests
CYCLE5 = np.array(
    [[0, 1, 2, 2, 1],
     [1, 0, 1, 2, 2],
     [2, 1, 0, 1, 2],
     [2, 2, 1, 0, 1],
     [1, 2, 2, 1, 0]],
    dtype=float,
)


def measure(mass) -> DiscreteMeasure:
    mass = np.asarray(mass, dtype=float)
    return DiscreteMeasure(support=np.arange(mass.size), mass=mass / mass.sum())


class TestDiscreteMeasure:
    def test_rejects_duplicate_support(self):
        with pytest.raises(InvalidParams):
            DiscreteMeasure(np.array([1, 1]), np.array([0.5, 0.5]))

    def test_rejects_unnormalized_mass(self):
        with pytest.raises(InvalidParams):
            DiscreteMeasure(np.array([0, 1]), np.array([0.5, 0.6]))

    def test_rejects_negative_mass(self):
        with pytest.raises(InvalidParams):
            DiscreteMeasure(np.array([0, 1]), np.array([1.5, -0.5]))


class TestWasserstein:
    def test_identical_measures_cost_zero(self):
        mu = measure([0.2, 0.3, 0.5, 0.0, 0.0])
        assert wasserstein1(mu, mu, CYCLE5) == 0.0

    def test_single_route(self):
        mu = DiscreteMeasure(np.array([0]), np.array([1.0]))
        nu = DiscreteMeasure(np.array([1]), np.array([1.0]))
        assert wasserstein1(mu, nu, np.array([[3.0]])) == pytest.approx(3.0)

    def test_two_point_overlap_example(self):
        # mu on {a, b}, nu on {b, c} with d(a,b)=d(b,c)=1, d(a,c)=2.
        # Every feasible plan costs exactly 1: the vertex oracle agrees.
        mu = DiscreteMeasure(np.array([0, 1]), np.array([0.5, 0.5]))
        nu = DiscreteMeasure(np.array([1, 2]), np.array([0.5, 0.5]))
        dist = np.array([[1.0, 2.0], [0.0, 1.0]])
        expected = transport_vertex_enumeration(mu.mass, nu.mass, dist)
        assert expected == pytest.approx(1.0)
        assert wasserstein1(mu, nu, dist) == pytest.approx(expected, abs=1e-12)

    def test_mass_mismatch_raises(self):
        with pytest.raises(InfeasibleTransport):
            transport_cost(np.array([1.0]), np.array([0.9]), np.array([[1.0]]))

    def test_negative_cost_rejected(self):
        with pytest.raises(InvalidParams):
            transport_cost(np.array([1.0]), np.array([1.0]), np.array([[-1.0]]))

    def test_matches_vertex_enumeration_on_3pt_grid_exactly(self):
        """All rational-mass pairs over a fixed 3-point metric space."""
        space = CYCLE5[:3, :3]
        denominator = 6
        grid = [
            np.array(c, dtype=float) / denominator
            for c in itertools.product(range(denominator + 1), repeat=3)
            if sum(c) == denominator
        ]
        for mu in grid:
            for nu in grid:
                got = transport_cost(mu, nu, space)
                want = transport_vertex_enumeration(mu, nu, space)
                assert got == pytest.approx(want, abs=1e-9)

    def test_matches_vertex_enumeration_on_4pt_samples(self, rng):
        dist = np.array(
            [[0, 1, 2, 3], [1, 0, 1, 2], [2, 1, 0, 1], [3, 2, 1, 0]], dtype=float
        )
        for _ in range(60):
            mu = rng.integers(0, 5, 4).astype(float) + rng.random(4) * 0
            nu = rng.integers(0, 5, 4).astype(float)
            mu[rng.integers(4)] += 1
            nu[rng.integers(4)] += 1
            mu /= mu.sum()
            nu /= nu.sum()
            got = transport_cost(mu, nu, dist)
            want = transport_vertex_enumeration(mu, nu, dist)
            assert got == pytest.approx(want, abs=1e-9)


mass5 = st.lists(
    st.integers(min_value=0, max_value=8), min_size=5, max_size=5
).filter(lambda m: sum(m) > 0)


class TestMetricProperties:
    @given(mass5, mass5)
    @settings(max_examples=60, deadline=None)
    def test_symmetry(self, m1, m2):
        mu, nu = measure(m1), measure(m2)
        lhs = wasserstein1(mu, nu, CYCLE5)
        rhs = wasserstein1(nu, mu, CYCLE5.T)
        assert lhs == pytest.approx(rhs, abs=1e-10)

    @given(mass5, mass5, mass5)
    @settings(max_examples=60, deadline=None)
    def test_triangle_inequality(self, m1, m2, m3):
        mu, nu, rho = measure(m1), measure(m2), measure(m3)
        d12 = wasserstein1(mu, nu, CYCLE5)
        d23 = wasserstein1(nu, rho, CYCLE5)
        d13 = wasserstein1(mu, rho, CYCLE5)
        assert d13 <= d12 + d23 + 1e-9

    @given(mass5, mass5)
    @settings(max_examples=60, deadline=None)
    def test_zero_iff_equal(self, m1, m2):
        mu, nu = measure(m1), measure(m2)
        value = wasserstein1(mu, nu, CYCLE5)
        if np.allclose(mu.mass, nu.mass, atol=1e-12):
            assert value == pytest.approx(0.0, abs=1e-12)
        else:
            assert value > 0.0
