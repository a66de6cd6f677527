import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sumreg import (
    BatchError,
    ContractError,
    DimensionError,
    EmbeddingBatch,
    PermutationSpec,
    StandardizedBatch,
    center,
    covariance,
    cross_correlation,
    permute_features,
    permute_matrix,
    sample_permutation,
    standardize,
)


class TestContainers:
    def test_rejects_non_finite(self):
        with pytest.raises(BatchError):
            EmbeddingBatch(np.array([[1.0, np.nan]]))

    def test_rejects_wrong_rank(self):
        with pytest.raises(DimensionError):
            EmbeddingBatch(np.arange(3.0))

    def test_shape_properties(self, rng):
        b = EmbeddingBatch(rng.standard_normal((5, 3)))
        assert (b.n, b.d) == (5, 3)

    def test_float32_preserved(self, rng):
        b = EmbeddingBatch(rng.standard_normal((4, 4)).astype(np.float32))
        assert b.data.dtype == np.float32

    def test_covariance_kind_requires_symmetry(self):
        from sumreg import CorrMatrix

        with pytest.raises(ContractError):
            CorrMatrix(np.array([[1.0, 0.5], [0.2, 1.0]]), kind="covariance")


class TestStandardize:
    def test_zero_variance_column_maps_to_zero(self):
        out = standardize(np.array([[5.0], [5.0], [5.0]]))
        assert np.all(out.data == 0.0)

    def test_already_standardized_unchanged(self):
        col = np.array([-1.0, 0.0, 1.0])  # mean 0, unbiased std 1
        out = standardize(col[:, None])
        np.testing.assert_allclose(out.data[:, 0], col, atol=1e-12)

    def test_1_2_3_column(self):
        out = standardize(np.array([[1.0], [2.0], [3.0]]))
        np.testing.assert_allclose(out.data[:, 0], [-1.0, 0.0, 1.0], atol=1e-12)

    def test_n1_rejected(self):
        with pytest.raises(BatchError):
            standardize(np.ones((1, 3)))

    def test_column_stats(self, rng):
        out = standardize(rng.standard_normal((64, 8)) * 3 + 1)
        assert out.mode == "standardized"
        np.testing.assert_allclose(out.data.mean(axis=0), 0.0, atol=1e-6)
        np.testing.assert_allclose(out.data.std(axis=0, ddof=1), 1.0, atol=1e-4)


class TestCenter:
    def test_1_2_3_column(self):
        out = center(np.array([[1.0], [2.0], [3.0]]))
        np.testing.assert_allclose(out.data[:, 0], [-1.0, 0.0, 1.0], atol=1e-15)
        assert out.mode == "centered"

    def test_zero_column(self):
        out = center(np.zeros((3, 2)))
        assert np.all(out.data == 0.0)

    def test_idempotent(self, rng):
        x = rng.standard_normal((6, 4))
        once = center(x).data
        np.testing.assert_allclose(center(once).data, once, atol=1e-15)

    def test_n1_rejected(self):
        with pytest.raises(BatchError):
            center(np.ones((1, 2)))


class TestCrossCorrelation:
    def test_self_correlation_diagonal_is_one(self, rng):
        z = standardize(rng.standard_normal((16, 6)))
        c = cross_correlation(z, z)
        np.testing.assert_allclose(np.diag(c.data), 1.0, atol=1e-8)
        assert np.all(np.abs(c.data) <= 1.0 + 1e-6)

    def test_negated_view_diagonal(self, rng):
        z = standardize(rng.standard_normal((16, 6)))
        zneg = StandardizedBatch(-z.data, mode="standardized")
        c = cross_correlation(z, zneg)
        np.testing.assert_allclose(np.diag(c.data), -1.0, atol=1e-8)

    def test_hand_case_n2(self):
        # rows (1,-1),(-1,1): columns standardize to +-1/sqrt(2), so the
        # explicit sum (1/(n-1)) sum a_k a_k^T evaluates to [[1,-1],[-1,1]]
        a = standardize(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        c = cross_correlation(a, a)
        np.testing.assert_allclose(c.data, [[1.0, -1.0], [-1.0, 1.0]], atol=1e-12)

    def test_requires_standardized_mode(self, rng):
        x = rng.standard_normal((8, 3))
        with pytest.raises(ContractError):
            cross_correlation(center(x), standardize(x))

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            cross_correlation(
                standardize(rng.standard_normal((8, 3))),
                standardize(rng.standard_normal((8, 4))),
            )


class TestCovariance:
    def test_variance_on_diagonal(self):
        k = covariance(center(np.array([[1.0], [2.0], [3.0]])))
        np.testing.assert_allclose(k.data[0, 0], 1.0, atol=1e-15)

    def test_zero_batch(self):
        k = covariance(center(np.zeros((4, 3))))
        assert np.all(k.data == 0.0)

    def test_symmetric(self, rng):
        k = covariance(center(rng.standard_normal((10, 5))))
        np.testing.assert_allclose(k.data, k.data.T, atol=0)

    def test_standardized_input_matches_self_correlation(self, rng):
        z = standardize(rng.standard_normal((12, 5)))
        k = covariance(z)
        c = cross_correlation(z, z)
        np.testing.assert_allclose(k.data, c.data, atol=1e-10)

    def test_raw_batch_rejected(self, rng):
        with pytest.raises(ContractError):
            covariance(rng.standard_normal((8, 3)))


class TestPermutations:
    def test_d1_identity(self):
        assert sample_permutation(1, 5).pi.tolist() == [0]

    def test_deterministic(self):
        assert np.array_equal(sample_permutation(32, 9).pi, sample_permutation(32, 9).pi)

    def test_frozen_reference_draws(self):
        # regression fixtures from the documented Fisher-Yates/PCG64 generator
        assert sample_permutation(4, 0).pi.tolist() == [0, 2, 1, 3]
        assert sample_permutation(4, 123).pi.tolist() == [3, 1, 2, 0]
        assert sample_permutation(8, 7).pi.tolist() == [0, 1, 3, 2, 5, 6, 4, 7]

    def test_identity_permutation_noop(self, rng):
        x = rng.standard_normal((4, 5))
        p = PermutationSpec(np.arange(5))
        np.testing.assert_array_equal(permute_features(x, p).data, x)

    def test_inverse_recovers(self, rng):
        x = rng.standard_normal((4, 7))
        p = sample_permutation(7, 3)
        back = permute_features(permute_features(x, p), PermutationSpec(p.inverse()))
        np.testing.assert_array_equal(back.data, x)

    def test_d3_explicit(self):
        p = PermutationSpec(np.array([2, 0, 1]))
        row = np.array([[10.0, 20.0, 30.0]])
        out = permute_features(np.vstack([row, row]), p).data[0]
        # feature j lands at pi(j): 10 -> col 2, 20 -> col 0, 30 -> col 1
        assert out.tolist() == [20.0, 30.0, 10.0]

    def test_length_mismatch(self, rng):
        with pytest.raises(DimensionError):
            permute_features(rng.standard_normal((3, 4)), PermutationSpec(np.arange(3)))

    def test_non_bijection_rejected(self):
        with pytest.raises(ContractError):
            PermutationSpec(np.array([0, 0, 2]))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_conjugation_identity(self, seed):
        # C(permuted A, permuted B) == P C P^T, entrywise
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((8, 16))
        b = rng.standard_normal((8, 16))
        p = sample_permutation(16, seed)
        c = cross_correlation(standardize(a), standardize(b)).data
        cp = cross_correlation(
            standardize(permute_features(a, p)), standardize(permute_features(b, p))
        ).data
        np.testing.assert_allclose(cp, permute_matrix(c, p), atol=1e-10)

    def test_offdiag_multiset_invariant(self, rng):
        a = rng.standard_normal((8, 16))
        b = rng.standard_normal((8, 16))
        p = sample_permutation(16, 1)
        c = cross_correlation(standardize(a), standardize(b)).data
        cp = permute_matrix(c, p)
        off = lambda m: np.sort(m[~np.eye(16, dtype=bool)])
        np.testing.assert_allclose(off(c), off(cp), atol=1e-12)
