"""Monte-Carlo FER/BER harness: configuration, frame workers, result streaming.

Per-frame randomness is seeded from (master seed, frame index) only, so a
frame is bit-identical no matter which worker processes it, which algorithm
consumes it, or which Es/N0 point scales its noise.  Aggregation scans
results in frame order and applies the stopping rule on that ordered prefix,
which makes 1-worker and N-worker runs produce identical counts.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .channel import ChannelParams, Frame, apply_channel, modulate
from .joint import DecoderSchedule, decode_frame
from .ldpc import LdpcCode, parse_alist
from .trackers import ALGORITHMS, TrackerConfig

WORKERS_ENV = "PHASEDEC_WORKERS"


@dataclass
class SimConfig:
    code_path: str
    es_n0_db: Tuple[float, ...]
    algorithms: Tuple[str, ...] = ("proposed", "barb", "dp")
    m: int = 2
    sigma_delta: float = 0.1
    pilot_spacing: int = 80
    pilot_offset: int = 0
    t_d: float = 2.2
    dp_levels: int = 8
    dp_kernel_halfwidth: Optional[int] = None
    bessel_mode: str = "approx"
    outer_iters: int = 10
    ldpc_iters_per_outer: int = 10
    early_stop: bool = True
    max_frames: int = 100_000
    max_frame_errors: int = 100
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.algorithms, str):
            self.algorithms = tuple(a.strip() for a in self.algorithms.split(","))
        self.algorithms = tuple(self.algorithms)
        self.es_n0_db = tuple(float(x) for x in self.es_n0_db)
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")
        if not self.es_n0_db:
            raise ValueError("es_n0_db list must not be empty")
        if self.max_frames < 1 or self.max_frame_errors < 1:
            raise ValueError("max_frames and max_frame_errors must be >= 1")

    def tracker_config(self, algorithm: str) -> TrackerConfig:
        return TrackerConfig(algorithm=algorithm, t_d=self.t_d,
                             dp_levels=self.dp_levels,
                             dp_kernel_halfwidth=self.dp_kernel_halfwidth,
                             bessel_mode=self.bessel_mode)

    def schedule(self) -> DecoderSchedule:
        return DecoderSchedule(outer_iters=self.outer_iters,
                               ldpc_iters_per_outer=self.ldpc_iters_per_outer,
                               early_stop=self.early_stop)

    def channel_params(self, es_n0_db: float) -> ChannelParams:
        return ChannelParams(m=self.m, sigma_delta=self.sigma_delta,
                             es_n0_db=es_n0_db)

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        data = json.loads(text)
        if "algorithm" in data and "algorithms" not in data:
            data["algorithms"] = data.pop("algorithm")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "code_path" not in data or "es_n0_db" not in data:
            raise ValueError("config requires code_path and es_n0_db")
        return cls(**data)

    def to_json(self) -> str:
        d = asdict(self)
        d["algorithms"] = list(self.algorithms)
        d["es_n0_db"] = list(self.es_n0_db)
        return json.dumps(d, indent=2)


RESULT_FIELDS = ("algorithm", "es_n0_db", "frames", "frame_errors",
                 "bit_errors", "fer", "ber", "seed", "wall_time_s",
                 "fer_ci_low", "fer_ci_high")


@dataclass
class ResultRecord:
    algorithm: str
    es_n0_db: float
    frames: int
    frame_errors: int
    bit_errors: int
    fer: float
    ber: float
    seed: int
    wall_time_s: float
    fer_ci_low: float
    fer_ci_high: float

    def row(self) -> List[str]:
        out = []
        for name in RESULT_FIELDS:
            v = getattr(self, name)
            out.append(f"{v:.10g}" if isinstance(v, float) else str(v))
        return out


def wilson_interval(errors: int, trials: int, z: float = 1.959964) -> Tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials == 0:
        return (0.0, 1.0)
    p = errors / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    return (max(center - half, 0.0), min(center + half, 1.0))


def frame_rng(master_seed: int, frame_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, frame_index]))


def generate_frame(code: LdpcCode, config: SimConfig, es_n0_db: float,
                   frame_index: int) -> Tuple[Frame, np.ndarray]:
    """Random message -> codeword -> pilot-interleaved frame -> channel."""
    rng = frame_rng(config.seed, frame_index)
    params = config.channel_params(es_n0_db)
    message = rng.integers(0, 2, code.k_dim).astype(np.uint8)
    codeword = code.encode(message)
    frame = modulate(codeword, params, config.pilot_spacing, config.pilot_offset)
    return apply_channel(frame, params, rng), message


def simulate_frame(code: LdpcCode, config: SimConfig, algorithm: str,
                   es_n0_db: float, frame_index: int) -> Tuple[bool, int]:
    """Returns (frame_error, message bit errors) for one frame."""
    frame, message = generate_frame(code, config, es_n0_db, frame_index)
    params = config.channel_params(es_n0_db)
    result = decode_frame(frame, code, params, config.tracker_config(algorithm),
                          config.schedule())
    bit_errors = int(np.sum(result.message_bits != message))
    return bit_errors > 0, bit_errors


# -- worker-pool plumbing -----------------------------------------------------

_WORKER: dict = {}


def _worker_init(config_json: str, code_text: str):
    config = SimConfig.from_json(config_json)
    _WORKER["config"] = config
    _WORKER["code"] = parse_alist(code_text)
    _WORKER["code"].k_dim  # force encoder preprocessing once per worker


def _worker_run(task: Tuple[str, float, int]) -> Tuple[int, bool, int]:
    algorithm, es_n0_db, frame_index = task
    err, bits = simulate_frame(_WORKER["code"], _WORKER["config"], algorithm,
                               es_n0_db, frame_index)
    return frame_index, err, bits


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def run_point(code: LdpcCode, config: SimConfig, algorithm: str,
              es_n0_db: float, workers: int = 1,
              executor: Optional[ProcessPoolExecutor] = None,
              progress: Optional[Callable[[str], None]] = None) -> ResultRecord:
    """Simulate one (algorithm, Es/N0) point under the stopping rule.

    Frames are consumed in index order; the run stops at the first index
    where either max_frame_errors or max_frames is reached, regardless of
    worker count.
    """
    t0 = time.monotonic()
    frames = 0
    frame_errors = 0
    bit_errors = 0
    batch = max(4 * workers, 8)
    next_index = 0

    def handle(results):
        nonlocal frames, frame_errors, bit_errors
        for _, err, bits in sorted(results):
            if frames >= config.max_frames or frame_errors >= config.max_frame_errors:
                return False
            frames += 1
            frame_errors += int(err)
            bit_errors += bits
        return frames < config.max_frames and frame_errors < config.max_frame_errors

    while frames < config.max_frames and frame_errors < config.max_frame_errors:
        todo = min(batch, config.max_frames - next_index)
        if todo <= 0:
            break
        tasks = [(algorithm, es_n0_db, next_index + i) for i in range(todo)]
        next_index += todo
        if executor is None:
            results = [_run_inline(code, config, t) for t in tasks]
        else:
            results = list(executor.map(_worker_run, tasks))
        if not handle(results):
            break
        if progress is not None:
            progress(f"{algorithm} @ {es_n0_db} dB: {frame_errors}/{frames} errors")

    fer = frame_errors / frames if frames else 0.0
    ber = bit_errors / (frames * code.k_dim) if frames else 0.0
    lo, hi = wilson_interval(frame_errors, frames)
    return ResultRecord(algorithm=algorithm, es_n0_db=es_n0_db, frames=frames,
                        frame_errors=frame_errors, bit_errors=bit_errors,
                        fer=fer, ber=ber, seed=config.seed,
                        wall_time_s=time.monotonic() - t0,
                        fer_ci_low=lo, fer_ci_high=hi)


def _run_inline(code, config, task):
    algorithm, es_n0_db, frame_index = task
    err, bits = simulate_frame(code, config, algorithm, es_n0_db, frame_index)
    return frame_index, err, bits


def run_sweep(config: SimConfig, csv_path: Optional[str] = None,
              json_path: Optional[str] = None, workers: Optional[int] = None,
              progress: Optional[Callable[[str], None]] = None) -> List[ResultRecord]:
    """Run every (algorithm, Es/N0) combination; stream CSV rows as points finish.

    The CSV is append-only and valid at every flush; a JSON mirror of all
    completed records is written at the end and on interrupt.
    """
    code_text = Path(config.code_path).read_text()
    code = parse_alist(code_text)
    code.k_dim  # fail fast on rank issues before any simulation work
    if workers is None:
        workers = default_workers()

    records: List[ResultRecord] = []
    csv_file = None
    writer = None
    if csv_path:
        csv_file = open(csv_path, "w", newline="")
        writer = csv.writer(csv_file)
        writer.writerow(RESULT_FIELDS)
        csv_file.flush()

    executor = None
    try:
        if workers > 1:
            executor = ProcessPoolExecutor(
                max_workers=workers, initializer=_worker_init,
                initargs=(config.to_json(), code_text))
        for algorithm in config.algorithms:
            for es in config.es_n0_db:
                rec = run_point(code, config, algorithm, es, workers,
                                executor, progress)
                records.append(rec)
                if writer is not None:
                    writer.writerow(rec.row())
                    csv_file.flush()
                if progress is not None:
                    progress(f"done {algorithm} @ {es} dB: fer={rec.fer:.4g} "
                             f"({rec.frame_errors}/{rec.frames})")
    finally:
        if executor is not None:
            executor.shutdown()
        if csv_file is not None:
            csv_file.close()
        if json_path:
            Path(json_path).write_text(json.dumps(
                [asdict(r) for r in records], indent=2) + "\n")
    return records
