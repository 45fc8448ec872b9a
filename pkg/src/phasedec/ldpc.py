"""LDPC code container, alist I/O, systematic encoding, and sum-product decoding.

Parity-check matrices are held as row/column adjacency lists (the Tanner
graph).  The alist text format follows the usual sparse-matrix exchange
layout: dimensions, max degrees, per-node degree lists, then 1-based
adjacency for variables and for checks; zero-padded entries are accepted on
parse and omitted on write.

The decoder is a flooding sum-product with tanh-rule check updates, LLR
clamping at +/-20, and early stop on a zero syndrome.  Positive LLRs favor
bit 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .channel import gray_codes

LLR_CLAMP = 20.0
_TANH_EPS = 1e-300
_ATANH_LIM = 1.0 - 1e-15


class AlistError(ValueError):
    """Malformed alist text; carries the 1-based line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class LdpcCode:
    """Sparse binary parity-check matrix as adjacency lists.

    var_neighbors[v] lists the checks touching variable v; check_neighbors[c]
    lists the variables in check c.  Both views must agree edge for edge.
    """

    n: int
    var_neighbors: List[np.ndarray]
    check_neighbors: List[np.ndarray]

    def __post_init__(self):
        self.var_neighbors = [np.asarray(a, dtype=np.int64) for a in self.var_neighbors]
        self.check_neighbors = [np.asarray(a, dtype=np.int64) for a in self.check_neighbors]
        self._encoder = None
        self._edges = None
        edges_from_vars = {(c, v) for v, cs in enumerate(self.var_neighbors) for c in cs}
        edges_from_checks = {(c, v) for c, vs in enumerate(self.check_neighbors) for v in vs}
        if edges_from_vars != edges_from_checks:
            raise ValueError("row/column adjacency lists disagree")

    @property
    def num_checks(self) -> int:
        return len(self.check_neighbors)

    @property
    def k_dim(self) -> int:
        """Message length n - rank(H); triggers encoder preprocessing."""
        return self.n - self._encoder_state().rank

    @property
    def rate(self) -> float:
        return self.k_dim / self.n

    def dense_h(self) -> np.ndarray:
        h = np.zeros((self.num_checks, self.n), dtype=np.uint8)
        for c, vs in enumerate(self.check_neighbors):
            h[c, vs] = 1
        return h

    # -- encoding ----------------------------------------------------------

    def _encoder_state(self) -> "_EncoderState":
        if self._encoder is None:
            self._encoder = _preprocess_encoder(self.dense_h())
        return self._encoder

    def encode(self, message_bits: np.ndarray) -> np.ndarray:
        """Systematic encoding: place message on free columns, solve pivots.

        The output c satisfies H @ c = 0 over GF(2).
        """
        enc = self._encoder_state()
        message_bits = np.asarray(message_bits, dtype=np.uint8)
        if message_bits.size != self.n - enc.rank:
            raise ValueError(
                f"message length {message_bits.size} != k_dim {self.n - enc.rank}")
        codeword = np.zeros(self.n, dtype=np.uint8)
        codeword[enc.free_cols] = message_bits
        # back-substitution on the reduced rows: pivot bit = parity of free bits
        parity = (enc.reduced_free @ message_bits) % 2
        codeword[enc.pivot_cols] = parity
        return codeword

    def extract_message(self, codeword_bits: np.ndarray) -> np.ndarray:
        enc = self._encoder_state()
        return np.asarray(codeword_bits, dtype=np.uint8)[enc.free_cols]

    def syndrome(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8)
        return np.array([bits[vs].sum() % 2 for vs in self.check_neighbors],
                        dtype=np.uint8)

    # -- message-passing plumbing -------------------------------------------

    def _edge_arrays(self):
        if self._edges is None:
            edge_check = np.concatenate(
                [np.full(len(vs), c, dtype=np.int64)
                 for c, vs in enumerate(self.check_neighbors)]) \
                if self.num_checks else np.empty(0, dtype=np.int64)
            edge_var = np.concatenate(self.check_neighbors) \
                if self.num_checks else np.empty(0, dtype=np.int64)
            self._edges = (edge_check, edge_var)
        return self._edges


@dataclass
class _EncoderState:
    rank: int
    pivot_cols: np.ndarray
    free_cols: np.ndarray
    reduced_free: np.ndarray  # (rank, n-rank) reduced H restricted to free columns


def _preprocess_encoder(h: np.ndarray) -> _EncoderState:
    """GF(2) Gauss-Jordan elimination; dependent rows are dropped.

    Column order is preserved (no permutation is applied to the codeword);
    pivots are simply recorded per reduced row.
    """
    h = h.copy()
    m, n = h.shape
    pivot_cols = []
    row = 0
    for col in range(n):
        if row >= m:
            break
        hit = np.nonzero(h[row:, col])[0]
        if hit.size == 0:
            continue
        piv = row + hit[0]
        if piv != row:
            h[[row, piv]] = h[[piv, row]]
        others = np.nonzero(h[:, col])[0]
        others = others[others != row]
        h[others] ^= h[row]
        pivot_cols.append(col)
        row += 1
    rank = row
    pivot_cols = np.array(pivot_cols, dtype=np.int64)
    free_cols = np.setdiff1d(np.arange(n), pivot_cols)
    reduced_free = h[:rank][:, free_cols].astype(np.uint8)
    return _EncoderState(rank=rank, pivot_cols=pivot_cols, free_cols=free_cols,
                         reduced_free=reduced_free)


# -- alist I/O ---------------------------------------------------------------


def parse_alist(text: str) -> LdpcCode:
    """Parse alist text into a validated LdpcCode.

    Accepts both zero-padded and unpadded adjacency rows; rejects any
    dimension, degree, or adjacency inconsistency with the offending line
    number.
    """
    lines = text.splitlines()
    rows = [(i + 1, ln.split()) for i, ln in enumerate(lines) if ln.strip()]
    if len(rows) < 4:
        raise AlistError("alist needs at least 4 lines")

    def ints(idx, expect=None):
        lineno, toks = rows[idx]
        try:
            vals = [int(t) for t in toks]
        except ValueError:
            raise AlistError("non-integer token", lineno)
        if expect is not None and len(vals) != expect:
            raise AlistError(f"expected {expect} entries, got {len(vals)}", lineno)
        return lineno, vals

    _, dims = ints(0, 2)
    n, m = dims
    if n < 1 or m < 1:
        raise AlistError("dimensions must be positive", rows[0][0])
    _, maxdeg = ints(1, 2)
    max_col, max_row = maxdeg
    _, col_deg = ints(2, n)
    _, row_deg = ints(3, m)
    if max(col_deg, default=0) > max_col:
        raise AlistError(f"column degree exceeds declared max {max_col}", rows[2][0])
    if max(row_deg, default=0) > max_row:
        raise AlistError(f"row degree exceeds declared max {max_row}", rows[3][0])
    if len(rows) != 4 + n + m:
        raise AlistError(f"expected {4 + n + m} non-blank lines, found {len(rows)}",
                         rows[-1][0])

    var_neighbors = []
    for v in range(n):
        lineno, vals = ints(4 + v)
        vals = [x for x in vals if x != 0]
        if len(vals) != col_deg[v]:
            raise AlistError(
                f"variable {v + 1} lists {len(vals)} checks, degree says {col_deg[v]}",
                lineno)
        if any(x < 1 or x > m for x in vals):
            raise AlistError(f"check index out of range 1..{m}", lineno)
        var_neighbors.append(np.array(sorted(x - 1 for x in vals), dtype=np.int64))

    check_neighbors = []
    for c in range(m):
        lineno, vals = ints(4 + n + c)
        vals = [x for x in vals if x != 0]
        if len(vals) != row_deg[c]:
            raise AlistError(
                f"check {c + 1} lists {len(vals)} variables, degree says {row_deg[c]}",
                lineno)
        if any(x < 1 or x > n for x in vals):
            raise AlistError(f"variable index out of range 1..{n}", lineno)
        check_neighbors.append(np.array(sorted(x - 1 for x in vals), dtype=np.int64))

    try:
        return LdpcCode(n=n, var_neighbors=var_neighbors,
                        check_neighbors=check_neighbors)
    except ValueError as exc:
        raise AlistError(str(exc)) from exc


def write_alist(code: LdpcCode) -> str:
    """Serialize to alist text (unpadded adjacency); round-trips via parse_alist."""
    out = [f"{code.n} {code.num_checks}"]
    col_deg = [len(a) for a in code.var_neighbors]
    row_deg = [len(a) for a in code.check_neighbors]
    out.append(f"{max(col_deg, default=0)} {max(row_deg, default=0)}")
    out.append(" ".join(str(d) for d in col_deg))
    out.append(" ".join(str(d) for d in row_deg))
    for a in code.var_neighbors:
        out.append(" ".join(str(x + 1) for x in a))
    for a in code.check_neighbors:
        out.append(" ".join(str(x + 1) for x in a))
    return "\n".join(out) + "\n"


# -- belief propagation -------------------------------------------------------


@dataclass
class BpResult:
    hard_bits: np.ndarray
    posterior_llrs: np.ndarray
    extrinsic_llrs: np.ndarray
    converged: bool
    iterations: int


def decode_bp(code: LdpcCode, channel_llrs: np.ndarray, max_iters: int = 50,
              early_stop: bool = True) -> BpResult:
    """Flooding sum-product decoder.

    Returns hard decisions, posterior LLRs, extrinsic LLRs (posterior minus
    channel input, the tracker's feedback), and whether the syndrome reached
    zero.  Non-convergence is reported via the flag, never an exception.
    early_stop=False runs the full schedule regardless of the syndrome
    (needed when the posterior itself is the product, e.g. exact
    marginalization on a tree).
    """
    llr = np.clip(np.asarray(channel_llrs, dtype=float), -LLR_CLAMP, LLR_CLAMP)
    if llr.size != code.n:
        raise ValueError(f"LLR length {llr.size} != code length {code.n}")
    edge_check, edge_var = code._edge_arrays()
    n_edges = edge_check.size
    m = code.num_checks

    c2v = np.zeros(n_edges)
    var_sum = np.zeros(code.n)
    iterations = 0
    converged = _syndrome_ok(code, llr + var_sum, edge_check, edge_var, m)
    while (not converged or not early_stop) and iterations < max_iters:
        iterations += 1
        v2c = np.clip(llr[edge_var] + var_sum[edge_var] - c2v, -LLR_CLAMP, LLR_CLAMP)
        t = np.tanh(0.5 * v2c)
        # leave-one-out products in (sign, log|t|) form; |t| floored so a
        # exactly-zero message cannot poison the whole check
        mag = np.maximum(np.abs(t), _TANH_EPS)
        log_mag = np.log(mag)
        neg = t < 0
        check_log = np.bincount(edge_check, weights=log_mag, minlength=m)
        check_neg = np.bincount(edge_check, weights=neg.astype(float), minlength=m)
        prod_mag = np.exp(check_log[edge_check] - log_mag)
        sign = np.where((check_neg[edge_check] - neg) % 2 == 0, 1.0, -1.0)
        c2v = 2.0 * np.arctanh(np.clip(sign * prod_mag, -_ATANH_LIM, _ATANH_LIM))
        var_sum = np.bincount(edge_var, weights=c2v, minlength=code.n)
        converged = _syndrome_ok(code, llr + var_sum, edge_check, edge_var, m)

    posterior = llr + var_sum
    hard = (posterior < 0).astype(np.uint8)
    return BpResult(hard_bits=hard, posterior_llrs=posterior,
                    extrinsic_llrs=posterior - llr, converged=bool(converged),
                    iterations=iterations)


def _syndrome_ok(code, posterior, edge_check, edge_var, m) -> bool:
    bits = posterior < 0
    parity = np.bincount(edge_check, weights=bits[edge_var].astype(float),
                         minlength=m)
    return bool(np.all(parity.astype(np.int64) % 2 == 0))


# -- symbol distributions ------------------------------------------------------


@dataclass(frozen=True)
class SymbolDistribution:
    """Probability vector over the M constellation indices."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))

    def validate(self, tol: float = 1e-9) -> None:
        if np.any(self.probs < -tol):
            raise ValueError("negative symbol probability")
        if abs(self.probs.sum() - 1.0) > tol:
            raise ValueError(f"probabilities sum to {self.probs.sum()}, not 1")

    @classmethod
    def normalized(cls, vec) -> "SymbolDistribution":
        vec = np.asarray(vec, dtype=float)
        return cls(vec / vec.sum())


def llr_to_symbol_dist(llrs: np.ndarray, m: int) -> np.ndarray:
    """Per-bit LLRs (positive favors 0) to per-symbol probabilities, Gray map.

    llrs has B = log2(m) entries per symbol, MSB first; returns a (T, m)
    array of distributions, one row per symbol.
    """
    b = int(m).bit_length() - 1
    llrs = np.asarray(llrs, dtype=float)
    if llrs.size % b != 0:
        raise ValueError(f"LLR count {llrs.size} not a multiple of {b}")
    per_sym = llrs.reshape(-1, b)
    codes = gray_codes(m)
    shifts = np.arange(b - 1, -1, -1)
    bits_of_symbol = (codes[:, None] >> shifts) & 1  # (m, b)
    # log P(bit=v) = -log(1+exp(llr*(2v-1))), assembled per symbol in log domain
    signs = 2.0 * bits_of_symbol - 1.0
    log_p = -np.logaddexp(0.0, per_sym[:, None, :] * signs[None, :, :]).sum(axis=2)
    log_p -= logsumexp(log_p, axis=1, keepdims=True)
    return np.exp(log_p)


def symbol_dist_to_llr(dists: np.ndarray, m: int) -> np.ndarray:
    """Per-symbol probabilities to per-bit LLRs (exact marginalization)."""
    dists = np.atleast_2d(np.asarray(dists, dtype=float))
    if dists.shape[1] != m:
        raise ValueError(f"expected {m} columns, got {dists.shape[1]}")
    b = int(m).bit_length() - 1
    codes = gray_codes(m)
    shifts = np.arange(b - 1, -1, -1)
    bits_of_symbol = (codes[:, None] >> shifts) & 1  # (m, b)
    with np.errstate(divide="ignore"):
        log_d = np.log(np.maximum(dists, 1e-300))
    llrs = np.empty((dists.shape[0], b))
    for j in range(b):
        zero = logsumexp(log_d[:, bits_of_symbol[:, j] == 0], axis=1)
        one = logsumexp(log_d[:, bits_of_symbol[:, j] == 1], axis=1)
        llrs[:, j] = zero - one
    return np.clip(llrs.reshape(-1), -LLR_CLAMP, LLR_CLAMP)
