import math

import numpy as np
import pytest

from phasedec.channel import ChannelParams, Frame, apply_channel, modulate, constellation
from phasedec.codes import hamming74, peg_code, tree_code

TWO_PI = 2.0 * math.pi


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def hamming():
    return hamming74()


@pytest.fixture(scope="session")
def tree():
    return tree_code()


@pytest.fixture(scope="session")
def small_code():
    """Rate-1/2 PEG code small enough for fast joint-decode tests."""
    return peg_code(96, 0.5, seed=1)


def wrapped_gaussian_grid(theta: np.ndarray, sigma: float) -> np.ndarray:
    """Wrapped N(0, sigma^2) density evaluated on a grid (tests' oracle kernel)."""
    x = np.angle(np.exp(1j * theta))
    g = np.zeros_like(x)
    for w in range(-3, 4):
        g += np.exp(-0.5 * ((x + TWO_PI * w) / sigma) ** 2)
    return g / (sigma * math.sqrt(TWO_PI))


def make_noisy_frame(params: ChannelParams, n_bits: int, spacing: int, seed: int):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, n_bits)
    frame = modulate(bits, params, spacing)
    return apply_channel(frame, params, rng)


def make_slipped_frame(params: ChannelParams, n_bits: int, spacing: int,
                       slip_at: int, jump: float, seed: int) -> Frame:
    """Frame whose true phase takes a step of `jump` radians at slip_at."""
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, n_bits)
    frame = modulate(bits, params, spacing)
    K = len(frame)
    theta = rng.uniform(0, TWO_PI) + np.concatenate(
        [[0.0], np.cumsum(params.sigma_delta * rng.standard_normal(K - 1))])
    theta[slip_at:] += jump
    noise = (rng.standard_normal(K) + 1j * rng.standard_normal(K)) \
        * math.sqrt(params.sigma2)
    received = constellation(params.m)[frame.symbols] * np.exp(1j * theta) + noise
    return Frame(symbols=frame.symbols, pilot_mask=frame.pilot_mask,
                 m=params.m, true_phase=theta, received=received)


def genie_pd(frame: Frame, llr: float) -> np.ndarray:
    """Decoder-feedback stand-in: P_d favoring the true symbols at the given LLR."""
    K = len(frame)
    pd = np.full((K, frame.m), 1.0 / (frame.m - 1) / (1.0 + math.exp(llr)))
    p_true = 1.0 - 1.0 / (1.0 + math.exp(llr))
    pd[np.arange(K), frame.symbols] = p_true
    return pd / pd.sum(axis=1, keepdims=True)
