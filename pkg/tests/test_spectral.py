import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sumreg import (
    BatchError,
    ConfigError,
    DimensionError,
    NumericError,
    circ_conv_fft,
    circ_conv_naive,
    cross_correlation,
    dft,
    idft,
    involution_naive,
    standardize,
    summary_fft,
    summary_fft_grouped,
    summary_naive,
    summary_power_fft,
    summary_via_circcorr_naive,
)
from sumreg.batch import center


def dft_direct(x):
    """O(d^2) direct-summation DFT, the independent oracle for dft()."""
    d = len(x)
    k = np.arange(d)
    w = np.exp(-2j * np.pi * np.outer(k, k) / d)
    return w @ np.asarray(x, dtype=np.complex128)


class TestDft:
    def test_unit_impulse(self):
        e0 = np.zeros(8)
        e0[0] = 1.0
        np.testing.assert_allclose(dft(e0), np.ones(8), atol=1e-12)

    def test_constant_vector(self):
        np.testing.assert_allclose(dft(np.full(6, 2.5)), [15.0] + [0.0] * 5, atol=1e-12)

    @pytest.mark.parametrize("d", [1, 2, 3, 5, 7, 8, 12, 17, 31])
    def test_matches_direct_summation(self, d, rng):
        x = rng.standard_normal(d)
        np.testing.assert_allclose(dft(x), dft_direct(x), atol=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(hnp.arrays(np.float64, st.integers(1, 64), elements=st.floats(-100, 100)))
    def test_conjugate_symmetry_for_real_input(self, x):
        s = dft(x)
        d = len(x)
        mirrored = np.conj(s[(d - np.arange(d)) % d])
        np.testing.assert_allclose(s, mirrored, atol=1e-10 * max(1.0, np.abs(s).max()))

    def test_involution_identity(self, rng):
        # the transform of the involuted vector is the conjugated spectrum
        for d in (4, 7, 16):
            x = rng.standard_normal(d)
            np.testing.assert_allclose(
                dft(involution_naive(x)), np.conj(dft(x)), atol=1e-10
            )


class TestIdft:
    def test_round_trip(self, rng):
        x = rng.standard_normal(16)
        np.testing.assert_allclose(idft(dft(x)), x, atol=1e-10)

    def test_zero_spectrum(self):
        np.testing.assert_array_equal(idft(np.zeros(5, dtype=complex)), np.zeros(5))

    def test_impulse_spectrum(self):
        s = np.zeros(6, dtype=complex)
        s[0] = 6.0
        np.testing.assert_allclose(idft(s), np.ones(6), atol=1e-12)

    def test_residue_small_for_symmetric_spectra(self, rng):
        x = rng.standard_normal(32)
        out = np.fft.ifft(dft(x))
        assert np.max(np.abs(out.imag)) < 1e-9

    def test_large_residue_raises(self):
        s = np.zeros(8, dtype=complex)
        s[1] = 1.0  # asymmetric spectrum: the inverse is genuinely complex
        with pytest.raises(NumericError):
            idft(s)


class TestCircConvFft:
    def test_unit_impulse(self, rng):
        y = rng.standard_normal(9)
        e0 = np.zeros(9)
        e0[0] = 1.0
        np.testing.assert_allclose(circ_conv_fft(e0, y), y, atol=1e-12)

    def test_hand_case(self):
        np.testing.assert_allclose(circ_conv_fft([1.0, 2.0], [3.0, 4.0]), [11.0, 10.0])

    def test_matches_naive_random(self, rng):
        x = rng.standard_normal(64)
        y = rng.standard_normal(64)
        np.testing.assert_allclose(
            circ_conv_fft(x, y), circ_conv_naive(x, y), atol=1e-9
        )

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            circ_conv_fft(np.zeros(3), np.zeros(5))


class TestSummaryFft:
    def test_matches_naive_random(self, rng):
        a = standardize(rng.standard_normal((32, 64)))
        b = standardize(rng.standard_normal((32, 64)))
        fast = summary_fft(a, b)
        ref = summary_naive(cross_correlation(a, b))
        np.testing.assert_allclose(fast, ref, rtol=1e-9, atol=1e-12)

    def test_zero_view(self, rng):
        a = rng.standard_normal((4, 8))
        np.testing.assert_allclose(summary_fft(a, np.zeros((4, 8))), np.zeros(8), atol=0)

    def test_small_hand_case(self, rng):
        a = rng.standard_normal((2, 2))
        b = rng.standard_normal((2, 2))
        np.testing.assert_allclose(
            summary_fft(a, b), summary_via_circcorr_naive(a, b), atol=1e-12
        )

    def test_all_small_shapes_including_primes(self, rng):
        for n in range(2, 5):
            for d in range(1, 10):
                a = rng.standard_normal((n, d))
                b = rng.standard_normal((n, d))
                fast = summary_fft(a, b)
                ref = summary_via_circcorr_naive(a, b)
                scale = max(1.0, np.abs(ref).max())
                np.testing.assert_allclose(fast, ref, atol=1e-9 * scale)

    def test_batch_linearity_under_concatenation(self, rng):
        # splitting a batch and recombining the unnormalized sums is exact
        a = rng.standard_normal((10, 12))
        b = rng.standard_normal((10, 12))
        whole = summary_fft(a, b) * 9  # back to the plain sum over samples
        part1 = summary_fft(a[:4], b[:4]) * 3
        part2 = summary_fft(a[4:], b[4:]) * 5
        np.testing.assert_allclose(whole, part1 + part2, atol=1e-9)

    def test_n1_rejected(self):
        with pytest.raises(BatchError):
            summary_fft(np.ones((1, 4)), np.ones((1, 4)))

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            summary_fft(rng.standard_normal((4, 3)), rng.standard_normal((4, 5)))


class TestSummaryPower:
    def test_matches_pair_route(self, rng):
        x = center(rng.standard_normal((8, 16)))
        np.testing.assert_allclose(
            summary_power_fft(x), summary_fft(x, x), atol=1e-10
        )

    def test_symmetric_components(self, rng):
        x = center(rng.standard_normal((8, 16)))
        v = summary_power_fft(x)
        np.testing.assert_allclose(v, v[(16 - np.arange(16)) % 16], atol=1e-10)


class TestSummaryGrouped:
    def test_single_block_is_ungrouped(self, rng):
        a = standardize(rng.standard_normal((6, 8)))
        b = standardize(rng.standard_normal((6, 8)))
        blocks = summary_fft_grouped(a, b, 8)
        assert blocks.shape == (1, 1, 8)
        np.testing.assert_allclose(blocks[0, 0], summary_fft(a, b), atol=1e-12)

    @pytest.mark.parametrize("n,d,b", [(8, 12, 4), (8, 10, 4), (4, 9, 3), (5, 7, 2)])
    def test_blocks_match_sliced_oracle(self, n, d, b, rng):
        a = standardize(rng.standard_normal((n, d)))
        bb = standardize(rng.standard_normal((n, d)))
        c = cross_correlation(a, bb).data
        g = math.ceil(d / b)
        padded = np.zeros((g * b, g * b))
        padded[:d, :d] = c
        blocks = summary_fft_grouped(a, bb, b)
        assert blocks.shape == (g, g, b)
        for i in range(g):
            for j in range(g):
                ref = summary_naive(padded[i * b:(i + 1) * b, j * b:(j + 1) * b])
                np.testing.assert_allclose(blocks[i, j], ref, rtol=1e-9, atol=1e-12)

    def test_padding_contributes_zeros(self, rng):
        # d=10, b=4: the last block row/col covers 2 real + 2 dummy features
        a = standardize(rng.standard_normal((8, 10)))
        b = standardize(rng.standard_normal((8, 10)))
        blocks = summary_fft_grouped(a, b, 4)
        assert blocks.shape == (3, 3, 4)
        c = cross_correlation(a, b).data
        padded = np.zeros((12, 12))
        padded[:10, :10] = c
        ref_corner = summary_naive(padded[8:12, 8:12])
        np.testing.assert_allclose(blocks[2, 2], ref_corner, atol=1e-12)

    def test_bad_block(self, rng):
        a = rng.standard_normal((4, 8))
        with pytest.raises(ConfigError):
            summary_fft_grouped(a, a, 0)
        with pytest.raises(ConfigError):
            summary_fft_grouped(a, a, 9)
