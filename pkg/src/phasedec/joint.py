"""Joint iteration between a phase tracker and the LDPC decoder.

One outer iteration runs the tracker with the current downward symbol
probabilities, converts the upward probabilities at data positions to bit
LLRs, runs a batch of BP iterations, and feeds the extrinsic LLRs back as
the next downward probabilities.  Pilots always carry a point mass on the
pilot symbol and never enter the bit LLRs.  Extrinsic separation holds by
construction: the P_d returned to the tracker is the BP posterior minus the
tracker's own contribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import ChannelParams, Frame
from .ldpc import LdpcCode, decode_bp, llr_to_symbol_dist, symbol_dist_to_llr
from .trackers import OpCounter, TrackerConfig, effective_pd, run_tracker


@dataclass
class DecoderSchedule:
    outer_iters: int = 10
    ldpc_iters_per_outer: int = 10
    early_stop: bool = True
    total_bp_cap: int = 200

    def __post_init__(self):
        if self.outer_iters < 1 or self.ldpc_iters_per_outer < 1:
            raise ValueError("iteration counts must be >= 1")
        if self.outer_iters * self.ldpc_iters_per_outer > self.total_bp_cap:
            raise ValueError(
                f"{self.outer_iters} x {self.ldpc_iters_per_outer} BP iterations "
                f"exceeds the cap of {self.total_bp_cap}")


@dataclass
class DecodeResult:
    message_bits: np.ndarray
    codeword_bits: np.ndarray
    converged: bool
    outer_iterations: int
    bp_iterations: int
    diagnostics: dict


def decode_frame(frame: Frame, code: LdpcCode, params: ChannelParams,
                 tracker: TrackerConfig, schedule: DecoderSchedule,
                 counter: Optional[OpCounter] = None) -> DecodeResult:
    """Iteratively decode one received frame.

    Data-symbol P_d starts uniform (the tracker must acquire through pilots
    alone on the first sweep); the loop stops on a zero syndrome when
    early_stop is set, else after the full schedule.  Deterministic given
    its inputs.
    """
    if frame.received is None:
        raise ValueError("frame has no received samples")
    data_mask = frame.data_mask
    n_data = int(data_mask.sum())
    bits_per = params.bits_per_symbol
    if n_data * bits_per != code.n:
        raise ValueError(
            f"frame carries {n_data} data symbols x {bits_per} bits "
            f"but the code length is {code.n}")

    K = len(frame)
    m = params.m
    pd = np.full((K, m), 1.0 / m)
    pd = effective_pd(frame, pd)

    bp = None
    outer_done = 0
    bp_total = 0
    syndrome_weights = []
    for _ in range(schedule.outer_iters):
        outer_done += 1
        pu = run_tracker(frame, pd, tracker, params.sigma2,
                         params.sigma_delta, counter)
        llrs = symbol_dist_to_llr(pu[data_mask], m)
        bp = decode_bp(code, llrs, schedule.ldpc_iters_per_outer)
        bp_total += bp.iterations
        syndrome_weights.append(int(code.syndrome(bp.hard_bits).sum()))
        if bp.converged and schedule.early_stop:
            break
        pd[data_mask] = llr_to_symbol_dist(bp.extrinsic_llrs, m)
        pd = effective_pd(frame, pd)

    return DecodeResult(
        message_bits=code.extract_message(bp.hard_bits),
        codeword_bits=bp.hard_bits,
        converged=bp.converged,
        outer_iterations=outer_done,
        bp_iterations=bp_total,
        diagnostics={"syndrome_weights": syndrome_weights},
    )
