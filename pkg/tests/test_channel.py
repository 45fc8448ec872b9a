"""Tests for modulation, the Wiener/AWGN channel, and likelihoods."""

import math

import numpy as np
import pytest
from scipy.special import iv
from scipy.stats import kurtosis, skew

from phasedec.channel import (
    ChannelParams,
    Frame,
    apply_channel,
    bits_to_indices,
    constellation,
    frame_length_for,
    gray_codes,
    indices_to_bits,
    modulate,
    pilot_mask_for,
    symbol_likelihood,
)

TWO_PI = 2.0 * math.pi


def bpsk(es_n0_db=7.0, sigma_delta=0.1):
    return ChannelParams(m=2, sigma_delta=sigma_delta, es_n0_db=es_n0_db)


class TestParams:
    def test_sigma2_conversion(self):
        assert bpsk(0.0).sigma2 == pytest.approx(0.5)
        assert bpsk(10.0).sigma2 == pytest.approx(0.05)

    def test_rejects_bad_order(self):
        for m in (0, 1, 3, 6):
            with pytest.raises(ValueError):
                ChannelParams(m=m, sigma_delta=0.1, es_n0_db=5.0)

    def test_unit_energy(self):
        for m in (2, 4, 8):
            assert np.abs(constellation(m)) == pytest.approx(np.ones(m))


class TestMapping:
    def test_bpsk_map(self):
        # bits [0,1,0] -> +1, -1, +1
        idx = bits_to_indices(np.array([0, 1, 0]), 2)
        pts = constellation(2)[idx]
        assert pts == pytest.approx(np.array([1.0, -1.0, 1.0]))

    def test_gray_adjacency(self):
        for m in (4, 8, 16):
            codes = gray_codes(m)
            for i in range(m):
                diff = codes[i] ^ codes[(i + 1) % m]
                assert bin(int(diff)).count("1") == 1

    def test_roundtrip(self, rng):
        for m in (2, 4, 8):
            bits = rng.integers(0, 2, 8 * (m.bit_length() - 1))
            assert np.array_equal(indices_to_bits(bits_to_indices(bits, m), m), bits)

    def test_bit_count_validation(self):
        with pytest.raises(ValueError, match="divisible by 2"):
            bits_to_indices(np.array([0, 1, 0]), 4)


class TestPilots:
    def test_spec_positions(self):
        mask = pilot_mask_for(161, 80)
        assert np.array_equal(np.nonzero(mask)[0], [0, 80, 160])

    def test_offset(self):
        mask = pilot_mask_for(20, 8, offset=3)
        assert np.array_equal(np.nonzero(mask)[0], [3, 11, 19])

    def test_positions_independent_of_data(self, rng):
        params = bpsk()
        f1 = modulate(rng.integers(0, 2, 100), params, 16)
        f2 = modulate(rng.integers(0, 2, 100), params, 16)
        assert np.array_equal(f1.pilot_mask, f2.pilot_mask)

    def test_frame_length(self):
        assert frame_length_for(2048, 80) == 2074
        frame = modulate(np.zeros(2048, dtype=int), bpsk(), 80)
        assert len(frame) == 2074
        assert frame.pilot_mask.sum() == 26
        assert np.all(frame.symbols[frame.pilot_mask] == 0)

    def test_modulate_length_error_names_expectation(self):
        with pytest.raises(ValueError, match="multiple of 2"):
            modulate(np.zeros(7, dtype=int), ChannelParams(4, 0.1, 5.0), 16)


class TestApplyChannel:
    def test_deterministic_given_seed(self, rng):
        params = bpsk()
        frame = modulate(rng.integers(0, 2, 50), params, 10)
        a = apply_channel(frame, params, 99)
        b = apply_channel(frame, params, 99)
        assert np.array_equal(a.received, b.received)
        assert np.array_equal(a.true_phase, b.true_phase)
        c = apply_channel(frame, params, 100)
        assert not np.array_equal(a.received, c.received)

    def test_noiseless_limit(self, rng):
        params = ChannelParams(m=2, sigma_delta=0.0, es_n0_db=300.0)
        frame = modulate(rng.integers(0, 2, 32), params, 8)
        out = apply_channel(frame, params, 7)
        expected = constellation(2)[out.symbols] * np.exp(1j * out.true_phase[0])
        assert np.max(np.abs(out.received - expected)) < 1e-12
        assert np.ptp(out.true_phase) == 0.0

    def test_increment_variance(self):
        # sample variance of 10^6 Wiener increments lands in [0.0099, 0.0101]
        params = bpsk(sigma_delta=0.1)
        frame = modulate(np.zeros(10 ** 6, dtype=int), params, 10 ** 7)
        out = apply_channel(frame, params, 123)
        increments = np.diff(out.true_phase)
        assert 0.0099 <= increments.var() <= 0.0101

    def test_increment_normality(self):
        params = bpsk(sigma_delta=0.1)
        frame = modulate(np.zeros(10 ** 6, dtype=int), params, 10 ** 7)
        out = apply_channel(frame, params, 321)
        inc = np.diff(out.true_phase) / params.sigma_delta
        n = inc.size
        # 5-sigma sampling bounds: skew se ~ sqrt(6/n), excess kurtosis se ~ sqrt(24/n)
        assert abs(skew(inc)) < 5 * math.sqrt(6 / n)
        assert abs(kurtosis(inc)) < 5 * math.sqrt(24 / n)

    def test_common_random_numbers_across_snr(self, rng):
        # same seed -> same bits/phase/noise draws, only the noise scale differs
        params_a = bpsk(es_n0_db=5.0)
        params_b = bpsk(es_n0_db=8.0)
        frame = modulate(rng.integers(0, 2, 30), params_a, 10)
        a = apply_channel(frame, params_a, 5)
        b = apply_channel(frame, params_b, 5)
        assert np.array_equal(a.true_phase, b.true_phase)
        noise_a = a.received - constellation(2)[a.symbols] * np.exp(1j * a.true_phase)
        noise_b = b.received - constellation(2)[b.symbols] * np.exp(1j * b.true_phase)
        ratio = math.sqrt(params_a.sigma2 / params_b.sigma2)
        assert noise_a == pytest.approx(noise_b * ratio)


class TestLikelihood:
    def test_matched_filter_peak(self):
        c = constellation(4)[1]
        theta_true = 0.8
        r = c * np.exp(1j * theta_true)
        thetas = np.linspace(0, TWO_PI, 720, endpoint=False)
        vals = [symbol_likelihood(r, c, t, 0.1) for t in thetas]
        assert thetas[int(np.argmax(vals))] == pytest.approx(theta_true, abs=0.01)

    def test_zero_sample_uninformative(self):
        vals = [symbol_likelihood(0j, c, t, 0.2)
                for c in constellation(4) for t in (0.0, 1.0, 2.0)]
        assert vals == pytest.approx(np.ones(len(vals)))

    def test_theta_integral_is_bessel(self):
        # integral over theta equals 2*pi*I0(|r|/sigma2)
        r = 1.3 * np.exp(0.4j)
        sigma2 = 0.3
        n = 1 << 14
        thetas = np.arange(n) * (TWO_PI / n)
        total = sum(symbol_likelihood(r, 1 + 0j, t, sigma2) for t in thetas) * (TWO_PI / n)
        assert total == pytest.approx(TWO_PI * iv(0, abs(r) / sigma2), rel=1e-9)


class TestFrameJson:
    def test_roundtrip(self, rng):
        params = bpsk()
        frame = apply_channel(modulate(rng.integers(0, 2, 20), params, 8), params, 3)
        back = Frame.from_dict(frame.to_dict())
        assert np.array_equal(back.symbols, frame.symbols)
        assert np.array_equal(back.pilot_mask, frame.pilot_mask)
        assert back.m == frame.m
        assert back.received == pytest.approx(frame.received)
        assert back.true_phase == pytest.approx(frame.true_phase)

    def test_received_encoded_as_re_im_pairs(self, rng):
        params = bpsk()
        frame = apply_channel(modulate(rng.integers(0, 2, 4), params, 8), params, 3)
        d = frame.to_dict()
        assert isinstance(d["received"][0], list) and len(d["received"][0]) == 2
