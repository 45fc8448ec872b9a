"""MPSK modulation, Wiener phase-noise channel, and per-symbol likelihoods.

Unit-energy PSK over r_k = c_k * exp(j*theta_k) + n_k with theta_k a Gaussian
random walk.  Noise convention: n_k has independent real/imaginary parts of
variance sigma2 each, so Es/N0 in dB converts as sigma2 = 1/(2*10^(dB/10))
and the likelihood exponent is Re[r * conj(c) * exp(-j*theta)] / sigma2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

TWO_PI = 2.0 * math.pi

PILOT_SYMBOL = 0  # pilots always transmit constellation index 0


@dataclass(frozen=True)
class ChannelParams:
    m: int
    sigma_delta: float
    es_n0_db: float

    def __post_init__(self):
        if self.m < 2 or (self.m & (self.m - 1)) != 0:
            raise ValueError(f"constellation order must be a power of 2 >= 2, got {self.m}")
        if self.sigma_delta < 0:
            raise ValueError("sigma_delta must be >= 0")

    @property
    def sigma2(self) -> float:
        """Per-component noise variance for unit-energy symbols."""
        return 1.0 / (2.0 * 10.0 ** (self.es_n0_db / 10.0))

    @property
    def bits_per_symbol(self) -> int:
        return self.m.bit_length() - 1


def constellation(m: int) -> np.ndarray:
    """Unit-energy MPSK points c_i = exp(j*2*pi*i/m)."""
    return np.exp(2j * np.pi * np.arange(m) / m)


def gray_codes(m: int) -> np.ndarray:
    """gray_codes(m)[i] is the bit pattern carried by constellation index i."""
    idx = np.arange(m)
    return idx ^ (idx >> 1)


def _gray_inverse(m: int) -> np.ndarray:
    inv = np.empty(m, dtype=np.int64)
    inv[gray_codes(m)] = np.arange(m)
    return inv


def bits_to_indices(bits: np.ndarray, m: int) -> np.ndarray:
    """Pack bits (MSB first per symbol) into Gray-mapped constellation indices."""
    b = int(m).bit_length() - 1
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size % b != 0:
        raise ValueError(f"bit count {bits.size} not divisible by {b} bits/symbol")
    vals = bits.reshape(-1, b) @ (1 << np.arange(b - 1, -1, -1, dtype=np.int64))
    return _gray_inverse(m)[vals]


def indices_to_bits(indices: np.ndarray, m: int) -> np.ndarray:
    """Inverse of bits_to_indices."""
    b = int(m).bit_length() - 1
    vals = gray_codes(m)[np.asarray(indices, dtype=np.int64)]
    shifts = np.arange(b - 1, -1, -1, dtype=np.int64)
    return ((vals[:, None] >> shifts) & 1).reshape(-1)


@dataclass
class Frame:
    """One transmitted block: symbol indices, pilot mask, and (once the channel
    ran) the true phase trajectory and received samples."""

    symbols: np.ndarray
    pilot_mask: np.ndarray
    m: int
    true_phase: Optional[np.ndarray] = None
    received: Optional[np.ndarray] = None

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.int64)
        self.pilot_mask = np.asarray(self.pilot_mask, dtype=bool)
        if self.symbols.shape != self.pilot_mask.shape:
            raise ValueError("symbols and pilot_mask must have the same length")
        if self.true_phase is not None:
            self.true_phase = np.asarray(self.true_phase, dtype=float)
        if self.received is not None:
            self.received = np.asarray(self.received, dtype=complex)

    def __len__(self) -> int:
        return self.symbols.size

    @property
    def data_mask(self) -> np.ndarray:
        return ~self.pilot_mask

    def to_dict(self) -> dict:
        d = {
            "m": self.m,
            "symbols": self.symbols.tolist(),
            "pilot_mask": [bool(x) for x in self.pilot_mask],
        }
        if self.true_phase is not None:
            d["true_phase"] = self.true_phase.tolist()
        if self.received is not None:
            d["received"] = [[float(v.real), float(v.imag)] for v in self.received]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Frame":
        received = None
        if d.get("received") is not None:
            received = np.array([complex(re, im) for re, im in d["received"]])
        true_phase = None
        if d.get("true_phase") is not None:
            true_phase = np.asarray(d["true_phase"], dtype=float)
        return cls(symbols=np.asarray(d["symbols"]),
                   pilot_mask=np.asarray(d["pilot_mask"], dtype=bool),
                   m=int(d["m"]), true_phase=true_phase, received=received)


def pilot_mask_for(length: int, spacing: int, offset: int = 0) -> np.ndarray:
    """Pilot positions k with k % spacing == offset, independent of data."""
    if spacing < 1:
        raise ValueError("pilot spacing must be >= 1")
    k = np.arange(length)
    return (k % spacing) == (offset % spacing)


def modulate(bits: np.ndarray, params: ChannelParams, pilot_spacing: int,
             pilot_offset: int = 0) -> Frame:
    """Gray-map bits to MPSK and interleave pilots every pilot_spacing slots.

    The frame is exactly long enough to hold all data symbols; pilot slots
    (symbol index 0) occupy positions congruent to pilot_offset.
    """
    bits = np.asarray(bits, dtype=np.int64)
    b = params.bits_per_symbol
    if bits.size % b != 0:
        raise ValueError(
            f"bit count {bits.size} is not a multiple of {b} bits/symbol "
            f"(expected a multiple of {b})")
    data = bits_to_indices(bits, params.m)
    n_data = data.size
    symbols = []
    mask = []
    i = 0
    k = 0
    while i < n_data:
        if k % pilot_spacing == pilot_offset % pilot_spacing:
            symbols.append(PILOT_SYMBOL)
            mask.append(True)
        else:
            symbols.append(int(data[i]))
            mask.append(False)
            i += 1
        k += 1
    return Frame(symbols=np.array(symbols, dtype=np.int64),
                 pilot_mask=np.array(mask, dtype=bool), m=params.m)


def frame_length_for(n_data: int, spacing: int, offset: int = 0) -> int:
    """Total slots needed by modulate() for n_data data symbols."""
    k = 0
    i = 0
    while i < n_data:
        if k % spacing != offset % spacing:
            i += 1
        k += 1
    return k


def apply_channel(frame: Frame, params: ChannelParams, rng) -> Frame:
    """Run the frame through the Wiener phase + AWGN channel.

    theta_0 ~ U[0, 2*pi); theta_k = theta_{k-1} + N(0, sigma_delta^2);
    complex noise with per-component variance sigma2.  Deterministic given
    the generator state; an int is accepted as a seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    K = len(frame)
    theta0 = rng.uniform(0.0, TWO_PI)
    increments = rng.standard_normal(K - 1) if K > 1 else np.empty(0)
    noise = rng.standard_normal(K) + 1j * rng.standard_normal(K)
    theta = np.empty(K)
    theta[0] = theta0
    if K > 1:
        theta[1:] = theta0 + np.cumsum(params.sigma_delta * increments)
    points = constellation(params.m)[frame.symbols]
    received = points * np.exp(1j * theta) + math.sqrt(params.sigma2) * noise
    return Frame(symbols=frame.symbols.copy(), pilot_mask=frame.pilot_mask.copy(),
                 m=frame.m, true_phase=theta, received=received)


def symbol_likelihood(r: complex, c: complex, theta: float, sigma2: float) -> float:
    """Theta- and symbol-dependent likelihood factor exp(Re[r*conj(c)*e^{-j*theta}]/sigma2).

    Constant factors common to all (c, theta) are dropped.
    """
    rot = r * c.conjugate() * complex(math.cos(-theta), math.sin(-theta))
    return math.exp(rot.real / sigma2)
