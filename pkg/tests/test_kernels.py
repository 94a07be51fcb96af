import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddrshift.kernels import gaussian_kernel, kernel_matrix, median_heuristic, weighted_kernel

finite_floats = st.floats(min_value=-50, max_value=50, allow_nan=False)
vectors = st.integers(1, 5).flatmap(
    lambda d: st.tuples(
        st.lists(finite_floats, min_size=d, max_size=d),
        st.lists(finite_floats, min_size=d, max_size=d),
    )
)


class TestGaussianKernel:
    def test_self_similarity_is_one(self):
        for x in ([0.0], [1.0, 2.0, 3.0], [-4.5, 0.1]):
            assert gaussian_kernel(x, x, 0.7) == 1.0

    def test_unit_exponent(self):
        # distance sigma*sqrt(2) makes the exponent exactly -1
        sigma = 1.3
        assert gaussian_kernel([0.0], [sigma * np.sqrt(2)], sigma) == pytest.approx(np.exp(-1))

    def test_hand_computed_distance(self):
        # squared distance 9 + 16 = 25, 2 sigma^2 = 12.5 -> exp(-2)
        assert gaussian_kernel([1, 5], [4, 1], 2.5) == pytest.approx(np.exp(-2), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            gaussian_kernel([1, 2], [1, 2, 3], 1.0)

    def test_non_finite_input(self):
        with pytest.raises(ValueError):
            gaussian_kernel([np.nan], [0.0], 1.0)
        with pytest.raises(ValueError):
            gaussian_kernel([0.0], [np.inf], 1.0)

    def test_bad_sigma(self):
        for sigma in (0.0, -1.0, np.nan, np.inf):
            with pytest.raises(ValueError):
                gaussian_kernel([0.0], [1.0], sigma)

    @given(vectors, st.floats(min_value=0.05, max_value=20))
    def test_symmetry_and_bounds(self, xy, sigma):
        x, y = xy
        kxy = gaussian_kernel(x, y, sigma)
        assert kxy == gaussian_kernel(y, x, sigma)
        assert 0.0 <= kxy <= 1.0
        # strictly positive unless exp underflows
        exponent = np.sum((np.array(x) - np.array(y)) ** 2) / (2 * sigma**2)
        if exponent < 700:
            assert kxy > 0.0
        if kxy == 1.0:
            assert np.allclose(x, y)


class TestKernelMatrix:
    def test_self_kernel_symmetric_unit_diagonal(self):
        X = np.random.default_rng(0).normal(size=(20, 3))
        K = kernel_matrix(X, X, 1.2)
        assert np.array_equal(K, K.T)
        assert np.array_equal(np.diag(K), np.ones(20))

    def test_single_pair_reduces_to_gaussian_kernel(self):
        x, y = np.array([[0.3, -1.2]]), np.array([[2.0, 0.5]])
        assert kernel_matrix(x, y, 0.8)[0, 0] == pytest.approx(
            gaussian_kernel(x[0], y[0], 0.8), abs=1e-15
        )

    def test_self_kernel_psd(self):
        # eigendecomposition oracle: K + 1e-9 I has eigenvalues >= -1e-8
        X = np.random.default_rng(7).normal(size=(50, 4))
        K = kernel_matrix(X, X, 1.0) + 1e-9 * np.eye(50)
        assert np.linalg.eigvalsh(K).min() >= -1e-8

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            kernel_matrix(np.zeros((3, 2)), np.zeros((4, 3)), 1.0)

    def test_rejects_1d_input(self):
        with pytest.raises(ValueError, match="2-d"):
            kernel_matrix(np.zeros(3), np.zeros((4, 3)), 1.0)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_entries_in_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        K = kernel_matrix(rng.normal(size=(6, 2)), rng.normal(size=(4, 2)), rng.uniform(0.5, 5))
        assert K.min() > 0.0 and K.max() <= 1.0


class TestWeightedKernel:
    def test_unit_confidences_recover_plain_kernel(self):
        x, y = [0.1, 0.2], [1.0, -0.5]
        assert weighted_kernel(x, 1.0, y, 1.0, 0.9) == gaussian_kernel(x, y, 0.9)

    def test_zero_confidence_annihilates(self):
        assert weighted_kernel([1.0], 0.0, [5.0], 0.7, 1.0) == 0.0

    def test_half_confidence_self_kernel(self):
        x = [2.0, 3.0]
        assert weighted_kernel(x, 0.5, x, 0.5, 1.0) == 0.25

    def test_confidence_out_of_range(self):
        with pytest.raises(ValueError, match="confidence"):
            weighted_kernel([0.0], 1.5, [1.0], 1.0, 1.0)
        with pytest.raises(ValueError, match="confidence"):
            weighted_kernel([0.0], 0.5, [1.0], -0.1, 1.0)

    @given(vectors, st.floats(0, 1), st.floats(0, 1), st.floats(min_value=0.1, max_value=10))
    def test_factorisation(self, xy, wx, wy, sigma):
        x, y = xy
        expected = wx * wy * gaussian_kernel(x, y, sigma)
        assert weighted_kernel(x, wx, y, wy, sigma) == pytest.approx(expected, abs=1e-15)


class TestMedianHeuristic:
    def test_single_pair(self):
        assert median_heuristic(np.array([[0.0], [2.0]])) == 2.0

    def test_three_points(self):
        # pairwise distances {1, 1, 2} -> median 1
        assert median_heuristic(np.array([[0.0], [1.0], [2.0]])) == 1.0

    def test_matches_chi_distribution_median(self):
        # the distance of two standard 2-d normals is sqrt(2) times a
        # 2-dof chi variate, whose median is sqrt(2 ln 2)
        X = np.random.default_rng(11).standard_normal((500, 2))
        analytic = np.sqrt(2.0) * np.sqrt(2.0 * np.log(2.0))
        assert median_heuristic(X) == pytest.approx(analytic, rel=0.2)

    def test_subsampling_is_deterministic(self):
        X = np.random.default_rng(3).normal(size=(1500, 2))
        assert median_heuristic(X) == median_heuristic(X)

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            median_heuristic(np.zeros((1, 3)))

    def test_coincident_points(self):
        with pytest.raises(ValueError, match="zero"):
            median_heuristic(np.ones((5, 2)))
