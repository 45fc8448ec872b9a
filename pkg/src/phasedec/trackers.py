"""Phase-message trackers: Tikhonov-mixture canonical model, BARB, discrete phase.

All three map (received frame, downward symbol probabilities P_d) to upward
symbol probabilities P_u through forward/backward recursions over the Wiener
phase chain.

The mixture tracker represents each directional message as a confidence-
weighted Tikhonov plus a uniform floor: alpha * Tik(z) + (1 - alpha)/(2*pi).
Each forward step expands the message through the exact per-symbol
likelihood into an M-component Tikhonov mixture, selects the dominant
trajectory cluster by KL distance, reduces it with circular mean/variance
matching, and books the cluster's share of the full posterior mass into
alpha.  A pilot resets alpha to 1 and lets a fresh flat-prior hypothesis
compete with the tracked trajectory, which is what recovers from phase
slips.

BARB is the single-Tikhonov soft-symbol baseline (reconstructed update; the
original definition lives in prior work), and DP is the quantized-grid
sum-product that doubles as an accuracy oracle at large grid sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .channel import Frame, PILOT_SYMBOL, constellation
from .directional import (
    TWO_PI,
    UNIFORM,
    UNIFORM_EPS,
    Tikhonov,
    TikhonovMixture,
    bessel_ratio,
    cmvm,
    gaussian_smooth,
    log_bessel_i0,
)

_NEG_INF = float("-inf")

# The flat hypothesis exists to model phase slips, so the confidence update
# never treats its prior mass as exactly zero: a pilot reset reports
# alpha = 1 but the next update sees at least this much slip probability.
# Without the floor an alpha pinned at 1.0 could never be revised by any
# amount of conflicting evidence.
ALPHA_PRIOR_CAP = 1.0 - 1e-6

ALGORITHMS = ("proposed", "barb", "dp")


@dataclass(frozen=True)
class CanonicalMessage:
    """Tikhonov-plus-uniform directional message: alpha*Tik + (1-alpha)/(2*pi)."""

    alpha: float
    tik: Tikhonov

    def __post_init__(self):
        if not -1e-12 <= self.alpha <= 1.0 + 1e-12:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        object.__setattr__(self, "alpha", min(max(self.alpha, 0.0), 1.0))

    def log_density(self, theta):
        theta = np.asarray(theta, dtype=float)
        flat = (1.0 - self.alpha) / TWO_PI
        if self.alpha <= 0.0:
            return np.full(theta.shape, math.log(flat))
        peaked = self.alpha * self.tik.density(theta)
        return np.log(peaked + flat)


FLAT_MESSAGE = CanonicalMessage(0.0, UNIFORM)


@dataclass
class TrackerConfig:
    algorithm: str = "proposed"
    t_d: float = 2.2
    dp_levels: int = 8
    dp_kernel_halfwidth: Optional[int] = None
    bessel_mode: str = "approx"
    cluster_kl_mode: str = "exact"
    pilot_alpha_mode: str = "reset"  # or "cluster_mass"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.t_d <= 0:
            raise ValueError("t_d must be > 0")
        if self.dp_levels < 4:
            raise ValueError("dp_levels must be >= 4")
        if self.dp_kernel_halfwidth is not None and \
                self.dp_kernel_halfwidth > self.dp_levels // 2:
            raise ValueError("dp_kernel_halfwidth must be <= dp_levels/2")
        if self.bessel_mode not in ("exact", "approx"):
            raise ValueError("bessel_mode must be 'exact' or 'approx'")
        if self.cluster_kl_mode not in ("exact", "approx"):
            raise ValueError("cluster_kl_mode must be 'exact' or 'approx'")
        if self.pilot_alpha_mode not in ("reset", "cluster_mass"):
            raise ValueError("pilot_alpha_mode must be 'reset' or 'cluster_mass'")


@dataclass
class OpCounter:
    """Accumulates multiply-add and table-lookup-equivalent work."""

    operations: float = 0.0
    luts: float = 0.0
    symbols: int = 0

    def add(self, operations: float = 0.0, luts: float = 0.0, symbols: int = 0):
        self.operations += operations
        self.luts += luts
        self.symbols += symbols

    def per_symbol(self) -> float:
        return self.operations / max(self.symbols, 1)


@dataclass(frozen=True)
class OperationCounts:
    operations: int
    lut: int


def predicted_operation_counts(algorithm: str, m: int, l: Optional[int] = None,
                               q: Optional[int] = None) -> OperationCounts:
    """Per-code-symbol per-iteration load of each algorithm (analytical counts)."""
    if algorithm == "dp":
        if l is None or q is None:
            raise ValueError("dp counts need both l and q")
        return OperationCounts(13 * m * l + 10 * q * l - 9 * l - 3 * m,
                               3 * m * l + 2 * q * l - 3 * l - m)
    if algorithm == "barb":
        return OperationCounts(17 * m + 11, 3 * m + 3)
    if algorithm == "proposed":
        return OperationCounts(40 * m, 5 * m)
    raise ValueError(f"unknown algorithm {algorithm!r}")


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------


def received_projections(received: np.ndarray, m: int, sigma2: float) -> np.ndarray:
    """(K, M) matched-filter terms r_k * conj(c_j) / sigma2."""
    return np.outer(received, np.conj(constellation(m))) / sigma2


def effective_pd(frame: Frame, pd: np.ndarray) -> np.ndarray:
    """Force pilot rows to a point mass on the pilot symbol; pilots are known."""
    out = np.array(pd, dtype=float, copy=True)
    out[frame.pilot_mask] = 0.0
    out[frame.pilot_mask, PILOT_SYMBOL] = 1.0
    return out


def _safe_log_rows(pd: np.ndarray) -> np.ndarray:
    out = np.full(pd.shape, _NEG_INF)
    mask = pd > 0
    out[mask] = np.log(pd[mask])
    return out


# ---------------------------------------------------------------------------
# mixture construction (public contracts; the pass loop uses scalar twins)
# ---------------------------------------------------------------------------


def build_mixture_m1(prev: CanonicalMessage, r_prev: complex,
                     pd_prev: np.ndarray, sigma2: float, sigma_delta_sq: float,
                     bessel_mode: str = "approx") -> TikhonovMixture:
    """Propagate the tracked (Tikhonov) part of the message through one symbol.

    Component j combines the prior with the matched filter for symbol j,
    Z_j = z_prev + r*conj(c_j)/sigma2, then absorbs the phase increment via
    gaussian_smooth.  Weights are P_d(j) * I0(|Z_j|) / I0(|z_prev|), carried
    in the log domain; log_mass keeps the unnormalized total so callers can
    weigh this mixture against the flat-prior alternative.
    """
    m = len(pd_prev)
    proj = np.conj(constellation(m)) * (r_prev / sigma2)
    z_raw = prev.tik.z + proj
    k_raw = np.abs(z_raw)
    log_pd = _safe_log_rows(np.asarray(pd_prev, dtype=float)[None, :])[0]
    log_w = log_pd + log_bessel_i0(k_raw, bessel_mode) \
        - log_bessel_i0(prev.tik.kappa, bessel_mode)
    z_hat = gaussian_smooth(z_raw, sigma_delta_sq)
    return TikhonovMixture.from_log_weights(log_w, z_hat)


def build_mixture_m2(r_prev: complex, pd_prev: np.ndarray, sigma2: float,
                     sigma_delta_sq: float,
                     bessel_mode: str = "approx") -> TikhonovMixture:
    """Flat-prior counterpart of build_mixture_m1 (z_prev = 0).

    For PSK all components share concentration |r|/sigma2, so the I0 factors
    cancel and the weights reduce to P_d.
    """
    return build_mixture_m1(FLAT_MESSAGE, r_prev, pd_prev, sigma2,
                            sigma_delta_sq, bessel_mode)


def select_and_cluster(mix: TikhonovMixture, alpha_prev: float,
                       prev_was_pilot: bool, t_d: float,
                       bessel_mode: str = "approx",
                       cluster_kl_mode: str = "exact",
                       log_evidence_ratio: float = 0.0,
                       pilot_alpha_mode: str = "reset") -> CanonicalMessage:
    """Pick the dominant trajectory from a mixture and reduce it to one Tikhonov.

    The lead component maximizes weight * concentration; every component
    within t_d of it (closed-form Tikhonov KL from the lead) joins the
    cluster, which is renormalized and reduced by circular mean/variance
    matching.  The new confidence is the cluster's share of the posterior
    mass: alpha_prev * sum(cluster weights) when the tracked and flat
    hypotheses carry equal evidence (log_evidence_ratio = 0), and in general

        alpha = fJ * alpha_prev / (alpha_prev + (1 - alpha_prev) * exp(ler))

    with ler = log(flat-side mass / tracked-side mass).  After a pilot the
    trajectory is trusted outright: alpha = 1 (or the clustered mass when
    pilot_alpha_mode = "cluster_mass").
    """
    if mix.degenerate:
        return FLAT_MESSAGE
    weights = np.asarray(mix.weights, dtype=float)
    kappas = np.abs(mix.z)
    lead = int(np.argmax(weights * kappas))
    cluster = _cluster_mask(mix.z, kappas, lead, t_d, cluster_kl_mode)
    f_j = float(weights[cluster].sum())
    if f_j <= 0.0:
        return FLAT_MESSAGE
    sub = TikhonovMixture(weights[cluster] / f_j, mix.z[cluster])
    tik = cmvm(sub, bessel_mode)
    if prev_was_pilot:
        alpha = f_j if pilot_alpha_mode == "cluster_mass" else 1.0
    else:
        alpha = _posterior_cluster_mass(alpha_prev, f_j, log_evidence_ratio)
    return CanonicalMessage(alpha, tik)


def _cluster_mask(z: np.ndarray, kappas: np.ndarray, lead: int, t_d: float,
                  mode: str) -> np.ndarray:
    k_lead = kappas[lead]
    rho = bessel_ratio(k_lead, mode)
    li_lead = log_bessel_i0(k_lead, mode)
    # k_i * cos(mu_lead - mu_i) = Re(z_lead * conj(z_i)) / k_lead
    if k_lead < UNIFORM_EPS:
        proj = np.zeros_like(kappas)
    else:
        proj = (z[lead] * np.conj(z)).real / k_lead
    div = log_bessel_i0(kappas, mode) - li_lead + rho * (k_lead - proj)
    return div <= t_d


def _posterior_cluster_mass(alpha_prev: float, f_j: float, ler: float) -> float:
    alpha_prev = min(alpha_prev, ALPHA_PRIOR_CAP)
    if alpha_prev <= 0.0:
        return 0.0
    x = ler + math.log((1.0 - alpha_prev) / alpha_prev)
    if x > 700.0:
        return 0.0
    if x < -700.0:
        return f_j
    return f_j / (1.0 + math.exp(x))


# ---------------------------------------------------------------------------
# proposed tracker forward/backward (scalar hot loop)
# ---------------------------------------------------------------------------


def _logi0_s(k: float, approx: bool) -> float:
    return log_bessel_i0(k, "approx" if approx else "exact")


def _ratio_s(k: float, approx: bool) -> float:
    return bessel_ratio(k, "approx" if approx else "exact")


def forward_pass(frame: Frame, pd: np.ndarray, config: TrackerConfig,
                 sigma2: float, sigma_delta: float,
                 counter: Optional[OpCounter] = None) -> List[CanonicalMessage]:
    """Forward canonical messages p_f for every symbol position.

    The message at k excludes observation k; position 0 starts flat.  Pilot
    rows of pd are overridden with the known pilot symbol.  A step whose
    mixture weights all underflow emits a flat message and recovers at the
    next pilot.
    """
    pd = effective_pd(frame, pd)
    K = len(frame)
    m = frame.m
    proj = received_projections(frame.received, m, sigma2).tolist()
    log_pd = _safe_log_rows(pd).tolist()
    pilot = frame.pilot_mask.tolist()
    sd2 = sigma_delta * sigma_delta
    approx = config.bessel_mode == "approx"
    kl_approx = config.cluster_kl_mode == "approx"
    t_d = config.t_d
    reset_pilot = config.pilot_alpha_mode == "reset"

    msgs: List[CanonicalMessage] = [FLAT_MESSAGE]
    alpha = 0.0
    zf: complex = 0j
    for k in range(1, K):
        i = k - 1
        row = proj[i]
        lpd = log_pd[i]
        kf = abs(zf)
        li_kf = _logi0_s(kf, approx)
        # tracked-side mixture: Z_j = zf + proj, weights P_d * I0(|Z|)/I0(kf)
        z_raw = [zf + p for p in row]
        k_raw = [abs(z) for z in z_raw]
        lw1 = [lp + _logi0_s(kr, approx) - li_kf if lp > _NEG_INF else _NEG_INF
               for lp, kr in zip(lpd, k_raw)]
        k_obs = abs(row[0])
        log_mass_flat = _logi0_s(k_obs, approx)  # PSK: same |proj| for all j
        top1 = max(lw1)
        if top1 == _NEG_INF:
            msgs.append(FLAT_MESSAGE)
            alpha, zf = 0.0, 0j
            continue
        z_hat = [z / (1.0 + sd2 * kr) for z, kr in zip(z_raw, k_raw)]

        if pilot[i]:
            # two-part mixture: tracked components at mass alpha, fresh
            # flat-prior components at mass (1 - alpha)
            la = math.log(alpha) if alpha > 0.0 else _NEG_INF
            l1a = math.log(1.0 - alpha) if alpha < 1.0 else _NEG_INF
            cand_lw = [la + w for w in lw1]
            cand_z = list(z_hat)
            for j in range(m):
                lp = lpd[j]
                if lp == _NEG_INF:
                    continue
                cand_lw.append(l1a + lp + log_mass_flat)
                cand_z.append(row[j] / (1.0 + sd2 * k_obs))
            alpha_new, z_new = _cluster_scalar(
                cand_lw, cand_z, t_d, approx, kl_approx)
            alpha = 1.0 if reset_pilot else alpha_new
            zf = z_new
        else:
            mass_tracked = top1 + math.log(sum(math.exp(w - top1) for w in lw1))
            f_j, z_new = _cluster_scalar(lw1, z_hat, t_d, approx, kl_approx)
            alpha = _posterior_cluster_mass(alpha, f_j,
                                            log_mass_flat - mass_tracked)
            zf = z_new
        msgs.append(CanonicalMessage(alpha, Tikhonov(zf)))
    if counter is not None:
        # per-step arithmetic of the loop above: ~36 real ops and ~4 Bessel/
        # exp lookups per constellation point, plus constant bookkeeping
        counter.add(operations=(36 * m + 12) * (K - 1),
                    luts=(4 * m + 3) * (K - 1), symbols=K - 1)
    return msgs


def _cluster_scalar(log_w, z_hat, t_d, approx, kl_approx):
    """Scalar twin of select_and_cluster's mixture side.

    Returns (clustered weight fraction, reduced natural parameter).
    """
    top = max(log_w)
    w = [math.exp(lw - top) for lw in log_w]
    total = sum(w)
    kappas = [abs(z) for z in z_hat]
    lead = 0
    best = -1.0
    for idx, (wi, ki) in enumerate(zip(w, kappas)):
        s = wi * ki
        if s > best:
            best = s
            lead = idx
    k_lead = kappas[lead]
    z_lead = z_hat[lead]
    li_lead = _logi0_s(k_lead, kl_approx)
    rho_lead = _ratio_s(k_lead, kl_approx)
    cluster_w = 0.0
    res_re = 0.0
    res_im = 0.0
    for wi, zi, ki in zip(w, z_hat, kappas):
        if wi == 0.0:
            continue
        if ki < UNIFORM_EPS or k_lead < UNIFORM_EPS:
            proj = 0.0
        else:
            proj = (z_lead.real * zi.real + z_lead.imag * zi.imag) / k_lead
        div = _logi0_s(ki, kl_approx) - li_lead + rho_lead * (k_lead - proj)
        if div <= t_d:
            cluster_w += wi
            if ki > 0.0:
                r = _ratio_s(ki, approx)
                res_re += wi * r * zi.real / ki
                res_im += wi * r * zi.imag / ki
    if cluster_w <= 0.0:
        return 0.0, 0j
    r_len = math.hypot(res_re, res_im) / cluster_w
    if r_len < UNIFORM_EPS:
        return cluster_w / total, 0j
    if approx:
        kappa = 1.0 / (2.0 * (1.0 - min(r_len, 1.0 - 1e-16)))
        kappa = min(kappa, 1e6)
    else:
        from .directional import _invert_bessel_ratio
        kappa = _invert_bessel_ratio(r_len)
    scale = kappa / math.hypot(res_re, res_im)
    return cluster_w / total, complex(res_re * scale, res_im * scale)


def backward_pass(frame: Frame, pd: np.ndarray, config: TrackerConfig,
                  sigma2: float, sigma_delta: float,
                  counter: Optional[OpCounter] = None) -> List[CanonicalMessage]:
    """Backward messages p_b; equals forward_pass on the index-reversed frame."""
    rev = Frame(symbols=frame.symbols[::-1].copy(),
                pilot_mask=frame.pilot_mask[::-1].copy(), m=frame.m,
                received=frame.received[::-1].copy(),
                true_phase=None if frame.true_phase is None
                else frame.true_phase[::-1].copy())
    msgs = forward_pass(rev, np.asarray(pd)[::-1], config, sigma2,
                        sigma_delta, counter)
    return msgs[::-1]


# ---------------------------------------------------------------------------
# upward symbol probabilities
# ---------------------------------------------------------------------------


def compute_pu(fwd: CanonicalMessage, bwd: CanonicalMessage, r: complex,
               sigma2: float, m: int, bessel_mode: str = "approx") -> np.ndarray:
    """Upward symbol distribution at one position from its two messages.

    Four closed-form terms condition on whether each of the forward and
    backward sides is tracking (Tikhonov) or slipped (flat); all four are
    Bessel integrals of the PSK likelihood and are combined in the log
    domain.
    """
    proj = received_projections(np.array([r]), m, sigma2)
    out = pu_block(np.array([fwd.alpha]), np.array([fwd.tik.z]),
                   np.array([bwd.alpha]), np.array([bwd.tik.z]),
                   proj, bessel_mode)
    return out[0]


def pu_block(alpha_f: np.ndarray, z_f: np.ndarray, alpha_b: np.ndarray,
             z_b: np.ndarray, proj: np.ndarray,
             bessel_mode: str = "approx") -> np.ndarray:
    """Vectorized compute_pu over a whole frame: inputs (K,) and (K, M)."""
    la_f = _safe_log_rows(alpha_f[None, :])[0]
    la_b = _safe_log_rows(alpha_b[None, :])[0]
    l1_f = _safe_log_rows((1.0 - alpha_f)[None, :])[0]
    l1_b = _safe_log_rows((1.0 - alpha_b)[None, :])[0]
    li_f = log_bessel_i0(np.abs(z_f), bessel_mode)
    li_b = log_bessel_i0(np.abs(z_b), bessel_mode)

    def li(zsum):
        return log_bessel_i0(np.abs(zsum), bessel_mode)

    term_a = (la_f + la_b - li_f - li_b)[:, None] + li(z_f[:, None] + z_b[:, None] + proj)
    term_b = (la_f + l1_b - li_f)[:, None] + li(z_f[:, None] + proj)
    term_c = (l1_f + la_b - li_b)[:, None] + li(z_b[:, None] + proj)
    term_d = (l1_f + l1_b)[:, None] + li(proj)
    stacked = np.stack([term_a, term_b, term_c, term_d])
    top = np.max(stacked, axis=0)
    log_pu = top + np.log(np.sum(np.exp(stacked - top), axis=0))
    log_pu -= log_pu.max(axis=1, keepdims=True)
    pu = np.exp(log_pu)
    return pu / pu.sum(axis=1, keepdims=True)


def proposed_pass(frame: Frame, pd: np.ndarray, config: TrackerConfig,
                  sigma2: float, sigma_delta: float,
                  counter: Optional[OpCounter] = None) -> np.ndarray:
    """Full mixture-tracker sweep: forward + backward + P_u for every symbol."""
    fwd = forward_pass(frame, pd, config, sigma2, sigma_delta, counter)
    bwd = backward_pass(frame, pd, config, sigma2, sigma_delta, counter)
    proj = received_projections(frame.received, frame.m, sigma2)
    if counter is not None:
        counter.add(operations=10 * frame.m * len(frame),
                    luts=frame.m * len(frame))
    return pu_block(np.array([msg.alpha for msg in fwd]),
                    np.array([msg.tik.z for msg in fwd]),
                    np.array([msg.alpha for msg in bwd]),
                    np.array([msg.tik.z for msg in bwd]),
                    proj, config.bessel_mode)


# ---------------------------------------------------------------------------
# BARB baseline
# ---------------------------------------------------------------------------


def barb_pass(frame: Frame, pd: np.ndarray, config: TrackerConfig,
              sigma2: float, sigma_delta: float,
              counter: Optional[OpCounter] = None) -> np.ndarray:
    """Single-Tikhonov soft-symbol recursion.

    The downward message is collapsed to its mean symbol a = sum P_d(j) c_j
    before the phase update, so a uniform P_d contributes nothing and the
    estimate only diffuses between pilots (the first-iteration weakness this
    baseline is known for).  P_u uses the pure-Tikhonov rule.
    """
    pd = effective_pd(frame, pd)
    K = len(frame)
    m = frame.m
    soft = (pd @ constellation(m)).tolist()
    rec = frame.received.tolist()
    sd2 = sigma_delta * sigma_delta

    def step(z_prev: complex, idx: int) -> complex:
        a = soft[idx]
        denom = sigma2 + 0.5 * (1.0 - (a.real * a.real + a.imag * a.imag))
        z = z_prev + rec[idx] * a.conjugate() / denom
        return z / (1.0 + sd2 * abs(z))

    z_f = [0j] * K
    for k in range(1, K):
        z_f[k] = step(z_f[k - 1], k - 1)
    z_b = [0j] * K
    for k in range(K - 2, -1, -1):
        z_b[k] = step(z_b[k + 1], k + 1)

    proj = received_projections(frame.received, m, sigma2)
    zsum = np.asarray(z_f)[:, None] + np.asarray(z_b)[:, None] + proj
    log_pu = log_bessel_i0(np.abs(zsum), config.bessel_mode)
    log_pu -= log_pu.max(axis=1, keepdims=True)
    pu = np.exp(log_pu)
    if counter is not None:
        counter.add(operations=(17 * m + 14) * K, luts=(3 * m + 3) * K,
                    symbols=K)
    return pu / pu.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# discrete-phase baseline / oracle
# ---------------------------------------------------------------------------


@dataclass
class DpState:
    thetas: np.ndarray
    forward: np.ndarray   # (K, L) normalized grid densities, obs k excluded
    backward: np.ndarray


def dp_kernel(levels: int, sigma_delta: float,
              halfwidth: Optional[int] = None) -> np.ndarray:
    """Wrapped-Gaussian transition kernel, truncated to +/- halfwidth bins.

    Default halfwidth covers four standard deviations of the increment.
    sigma_delta = 0 collapses to the identity kernel.
    """
    if sigma_delta == 0.0:
        return np.array([1.0])
    if halfwidth is None:
        halfwidth = max(2, math.ceil(4.0 * sigma_delta * levels / TWO_PI))
    halfwidth = min(halfwidth, levels // 2)
    offs = np.arange(-halfwidth, halfwidth + 1)
    x = TWO_PI * offs / levels
    w = np.zeros_like(x)
    for wrap in (-2, -1, 0, 1, 2):
        w += np.exp(-0.5 * ((x + TWO_PI * wrap) / sigma_delta) ** 2)
    return w / w.sum()


def dp_forward_backward(frame: Frame, pd: np.ndarray, config: TrackerConfig,
                        sigma2: float, sigma_delta: float) -> DpState:
    pd = effective_pd(frame, pd)
    K = len(frame)
    L = config.dp_levels
    thetas = TWO_PI * np.arange(L) / L
    ll = _dp_loglik(frame, sigma2, thetas)          # (K, M, L)
    shift = ll.max(axis=(1, 2), keepdims=True)
    pdgrid = np.einsum("km,kml->kl", pd, np.exp(ll - shift))

    kernel = dp_kernel(L, sigma_delta, config.dp_kernel_halfwidth)
    offs = np.arange(len(kernel)) - (len(kernel) // 2)
    gather = (np.arange(L)[:, None] - offs[None, :]) % L

    forward = np.empty((K, L))
    forward[0] = 1.0 / L
    for k in range(1, K):
        v = forward[k - 1] * pdgrid[k - 1]
        nxt = v[gather] @ kernel
        forward[k] = nxt / nxt.sum()
    backward = np.empty((K, L))
    backward[K - 1] = 1.0 / L
    for k in range(K - 2, -1, -1):
        v = backward[k + 1] * pdgrid[k + 1]
        nxt = v[gather] @ kernel
        backward[k] = nxt / nxt.sum()
    return DpState(thetas=thetas, forward=forward, backward=backward)


def _dp_loglik(frame: Frame, sigma2: float, thetas: np.ndarray) -> np.ndarray:
    points = constellation(frame.m)
    rot = np.exp(-1j * thetas)
    return (frame.received[:, None, None] * np.conj(points)[None, :, None]
            * rot[None, None, :]).real / sigma2


def dp_pass(frame: Frame, pd: np.ndarray, config: TrackerConfig,
            sigma2: float, sigma_delta: float,
            counter: Optional[OpCounter] = None,
            state: Optional[DpState] = None) -> np.ndarray:
    """Quantized sum-product P_u; the oracle configuration uses large dp_levels."""
    if state is None:
        state = dp_forward_backward(frame, pd, config, sigma2, sigma_delta)
    ll = _dp_loglik(frame, sigma2, state.thetas)
    shift = ll.max(axis=(1, 2), keepdims=True)
    pu = np.einsum("kl,kml->km", state.forward * state.backward,
                   np.exp(ll - shift))
    if counter is not None:
        L = config.dp_levels
        q = len(dp_kernel(L, sigma_delta, config.dp_kernel_halfwidth)) // 2
        counter.add(operations=(13 * frame.m * L + 10 * q * L) * len(frame),
                    luts=(3 * frame.m * L) * len(frame), symbols=len(frame))
    return pu / pu.sum(axis=1, keepdims=True)


def grid_circular_mean(state: DpState, k: int, which: str = "forward") -> float:
    """Circular mean of one DP grid message (diagnostic/oracle comparisons)."""
    dens = state.forward[k] if which == "forward" else state.backward[k]
    res = np.sum(dens * np.exp(1j * state.thetas))
    return float(np.angle(res) % TWO_PI)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def run_tracker(frame: Frame, pd: np.ndarray, config: TrackerConfig,
                sigma2: float, sigma_delta: float,
                counter: Optional[OpCounter] = None) -> np.ndarray:
    if config.algorithm == "proposed":
        return proposed_pass(frame, pd, config, sigma2, sigma_delta, counter)
    if config.algorithm == "barb":
        return barb_pass(frame, pd, config, sigma2, sigma_delta, counter)
    if config.algorithm == "dp":
        return dp_pass(frame, pd, config, sigma2, sigma_delta, counter)
    raise ValueError(f"unknown algorithm {config.algorithm!r}")
