"""Circular statistics for phase tracking.

A Tikhonov (von Mises) density on the circle is parameterized here by a
single complex number ``z``:

    g(theta) = exp(Re[z * exp(-1j*theta)]) / (2*pi*I0(|z|))

so ``|z|`` is the concentration and ``arg(z)`` the mean direction.  ``z = 0``
is the uniform density.  Mixtures of such densities arise as phase messages
in joint decoding; this module provides their moments, products, the
KL-optimal single-Tikhonov reduction (circular mean and variance matching),
and the log-domain Bessel evaluations everything else is built on.

Concentrations of a few hundred are routine, and I0 overflows linear-domain
doubles near k ~ 700, so all Bessel magnitudes are carried as log(I0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Tuple

import numpy as np
from scipy import special as _sp

TWO_PI = 2.0 * math.pi
_HALF_LOG_TWO_PI = 0.5 * math.log(TWO_PI)

# Resultant magnitudes below this are treated as "uniform-like": the mean
# direction is numerically undefined and is reported as 0 by convention.
UNIFORM_EPS = 1e-12

# Validity thresholds for the closed-form approximations.  The asymptotic
# form of log I0 has absolute error ~1/(8k), which crosses 6e-3 at k ~ 21.9;
# the ratio form 1 - 1/(2k) has relative error ~1/(8k^2), crossing 1% near
# k ~ 4.3.  Below these the approx path falls back to the exact evaluation.
LOG_I0_APPROX_MIN_K = 22.0
RATIO_APPROX_MIN_K = 4.5

# Bracket for the exact concentration solve in cmvm().
_KAPPA_MIN = 1e-9
_KAPPA_MAX = 1e6


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature fails to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved tolerance {achieved:.3e})")
        self.achieved = achieved


def log_i0_asymptotic(k):
    """Raw narrowband form of log I0: k - log(k)/2 - log(2*pi)/2.

    This is the closed form the hardware-friendly tracker path uses; it is
    only applied where its absolute error stays below 6e-3 (see
    LOG_I0_APPROX_MIN_K).  Exposed separately so the formula itself can be
    evaluated at any k.
    """
    k = np.asarray(k, dtype=float)
    out = k - 0.5 * np.log(k) - _HALF_LOG_TWO_PI
    return float(out) if out.ndim == 0 else out


def bessel_ratio_asymptotic(k):
    """Raw narrowband form of I1/I0: 1 - 1/(2k), clamped to [0, 1)."""
    k = np.asarray(k, dtype=float)
    out = np.clip(1.0 - 0.5 / k, 0.0, np.nextafter(1.0, 0.0))
    return float(out) if out.ndim == 0 else out


def log_bessel_i0(k, mode: str = "exact"):
    """log I0(k) for k >= 0, scalar or array.

    exact mode is accurate to ~1e-12 relative (scaled-Bessel evaluation);
    approx mode uses log_i0_asymptotic where it meets a 6e-3 absolute error
    budget and silently falls back to exact below LOG_I0_APPROX_MIN_K.
    """
    if mode == "exact":
        if isinstance(k, (float, int)):
            if k < 0:
                raise ValueError(f"k must be >= 0, got {k}")
            return math.log(_sp.i0e(k)) + k
        k = np.asarray(k, dtype=float)
        if np.any(k < 0):
            raise ValueError("k must be >= 0")
        return np.log(_sp.i0e(k)) + k
    if mode != "approx":
        raise ValueError(f"unknown bessel mode {mode!r}")
    if isinstance(k, (float, int)):
        if k >= LOG_I0_APPROX_MIN_K:
            return k - 0.5 * math.log(k) - _HALF_LOG_TWO_PI
        return log_bessel_i0(float(k), "exact")
    k = np.asarray(k, dtype=float)
    exact = log_bessel_i0(k, "exact")
    with np.errstate(divide="ignore", invalid="ignore"):
        approx = k - 0.5 * np.log(k) - _HALF_LOG_TWO_PI
    return np.where(k >= LOG_I0_APPROX_MIN_K, approx, exact)


def bessel_ratio(k, mode: str = "exact"):
    """I1(k)/I0(k) in [0, 1), scalar or array.

    The ratio is the mean resultant length of a Tikhonov with concentration
    k.  approx mode uses 1 - 1/(2k) above RATIO_APPROX_MIN_K (relative error
    under 1%) and falls back to exact below.
    """
    if mode == "exact":
        if isinstance(k, (float, int)):
            if k < 0:
                raise ValueError(f"k must be >= 0, got {k}")
            if k == 0.0:
                return 0.0
            return _sp.i1e(k) / _sp.i0e(k)
        k = np.asarray(k, dtype=float)
        if np.any(k < 0):
            raise ValueError("k must be >= 0")
        with np.errstate(invalid="ignore"):
            out = np.where(k > 0, _sp.i1e(k) / _sp.i0e(np.maximum(k, 1e-300)), 0.0)
        return out
    if mode != "approx":
        raise ValueError(f"unknown bessel mode {mode!r}")
    if isinstance(k, (float, int)):
        if k >= RATIO_APPROX_MIN_K:
            return 1.0 - 0.5 / k
        return bessel_ratio(float(k), "exact")
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore"):
        approx = np.clip(1.0 - 0.5 / np.maximum(k, 1e-300), 0.0, None)
    return np.where(k >= RATIO_APPROX_MIN_K, approx, bessel_ratio(k, "exact"))


@dataclass(frozen=True)
class Tikhonov:
    """Tikhonov density with complex natural parameter z (k = |z|, mu = arg z)."""

    z: complex

    @property
    def kappa(self) -> float:
        return abs(self.z)

    @property
    def mu(self) -> float:
        """Mean direction in [0, 2*pi); 0 by convention for the uniform density."""
        if abs(self.z) < UNIFORM_EPS:
            return 0.0
        return math.atan2(self.z.imag, self.z.real) % TWO_PI

    @property
    def is_uniform(self) -> bool:
        return abs(self.z) < UNIFORM_EPS

    def log_density(self, theta):
        theta = np.asarray(theta, dtype=float)
        arg = self.z.real * np.cos(theta) + self.z.imag * np.sin(theta)
        return arg - math.log(TWO_PI) - log_bessel_i0(self.kappa, "exact")

    def density(self, theta):
        return np.exp(self.log_density(theta))


UNIFORM = Tikhonov(0j)


@dataclass(frozen=True)
class TikhonovMixture:
    """Weighted Tikhonov mixture; weights are normalized to sum to 1.

    log_mass carries the log of the total unnormalized mass the mixture was
    built with, so callers combining messages can restore relative evidence
    between mixtures.  degenerate marks a mixture whose weights all
    underflowed; its weights are a placeholder uniform vector.
    """

    weights: np.ndarray
    z: np.ndarray
    log_mass: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        z = np.asarray(self.z, dtype=complex)
        if w.shape != z.shape or w.ndim != 1 or w.size == 0:
            raise ValueError("weights and z must be equal-length non-empty 1-d arrays")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_components(cls, components) -> "TikhonovMixture":
        """Build from an iterable of (weight, Tikhonov) pairs, normalizing."""
        pairs = list(components)
        w = np.array([p[0] for p in pairs], dtype=float)
        z = np.array([p[1].z for p in pairs], dtype=complex)
        total = w.sum()
        if total <= 0:
            raise ValueError("component weights must have positive total mass")
        return cls(w / total, z, log_mass=math.log(total))

    @classmethod
    def from_log_weights(cls, log_w, z) -> "TikhonovMixture":
        """Normalize log-domain weights; flags a degenerate mixture if all underflow."""
        log_w = np.asarray(log_w, dtype=float)
        z = np.asarray(z, dtype=complex)
        top = np.max(log_w)
        if not np.isfinite(top):
            n = log_w.size
            return cls(np.full(n, 1.0 / n), np.zeros(n, complex),
                       log_mass=-np.inf, degenerate=True)
        w = np.exp(log_w - top)
        total = w.sum()
        return cls(w / total, z, log_mass=top + math.log(total))

    @property
    def components(self) -> Iterator[Tuple[float, Tikhonov]]:
        return iter((float(a), Tikhonov(complex(zz))) for a, zz in zip(self.weights, self.z))

    def validate(self, tol: float = 1e-9) -> None:
        if np.any(self.weights < -tol):
            raise ValueError("mixture weights must be nonnegative")
        if not self.degenerate and abs(self.weights.sum() - 1.0) > tol:
            raise ValueError(f"mixture weights sum to {self.weights.sum()}, not 1")

    def log_density(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        # (N, T) exponent grid; weights folded in log domain for large kappas
        arg = (np.outer(self.z.real, np.cos(theta))
               + np.outer(self.z.imag, np.sin(theta)))
        log_norm = log_bessel_i0(np.abs(self.z), "exact") + math.log(TWO_PI)
        with np.errstate(divide="ignore"):
            logs = np.log(self.weights)[:, None] + arg - log_norm[:, None]
        return _logsumexp_axis0(logs)

    def density(self, theta):
        return np.exp(self.log_density(theta))


def _logsumexp_axis0(a: np.ndarray) -> np.ndarray:
    top = np.max(a, axis=0)
    safe = np.where(np.isfinite(top), top, 0.0)
    out = safe + np.log(np.sum(np.exp(a - safe), axis=0))
    return np.where(np.isfinite(top), out, -np.inf)


@dataclass(frozen=True)
class CircularMoments:
    """First-moment summary: mean in [0, 2*pi), variance in [0, 1].

    uniform_like is set when the resultant magnitude fell below UNIFORM_EPS;
    the mean is then 0 by convention.
    """

    mean: float
    variance: float
    uniform_like: bool = False


def _mixture_resultant(m: TikhonovMixture, mode: str) -> complex:
    kappas = np.abs(m.z)
    rho = bessel_ratio(kappas, mode)
    with np.errstate(invalid="ignore"):
        units = np.where(kappas > 0, m.z / np.maximum(kappas, 1e-300), 0.0 + 0j)
    return complex(np.sum(m.weights * rho * units))


def circular_moments(m: TikhonovMixture, mode: str = "exact") -> CircularMoments:
    """Circular mean and variance of a Tikhonov mixture.

    The first trigonometric moment of the mixture is the weighted vector sum
    of per-component resultants (I1/I0)(k_i) * exp(j*mu_i); the variance is
    one minus its magnitude.
    """
    m.validate()
    res = _mixture_resultant(m, mode)
    r = abs(res)
    if r < UNIFORM_EPS:
        return CircularMoments(0.0, 1.0, uniform_like=True)
    return CircularMoments(math.atan2(res.imag, res.real) % TWO_PI,
                           min(1.0 - r, 1.0), uniform_like=False)


def _invert_bessel_ratio(target: float) -> float:
    """Solve I1(k)/I0(k) = target for k, to ~1e-12.

    Newton iteration with the d=2 von Mises-Fisher starting guess, guarded
    by bisection on [_KAPPA_MIN, _KAPPA_MAX] so it cannot escape the bracket.
    """
    if target <= 0.0:
        return 0.0
    hi_ratio = bessel_ratio(_KAPPA_MAX, "exact")
    if target >= hi_ratio:
        return _KAPPA_MAX
    lo, hi = _KAPPA_MIN, _KAPPA_MAX
    r2 = target * target
    k = target * (2.0 - r2) / max(1.0 - r2, 1e-300)
    k = min(max(k, lo), hi)
    for _ in range(100):
        rho = bessel_ratio(k, "exact")
        err = rho - target
        if abs(err) < 1e-13:
            return k
        if err > 0:
            hi = k
        else:
            lo = k
        # d(rho)/dk = 1 - rho/k - rho^2
        deriv = 1.0 - rho / k - rho * rho
        if deriv > 0:
            step = err / deriv
            nxt = k - step
        else:
            nxt = 0.5 * (lo + hi)
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - k) <= 1e-12 * max(1.0, k):
            return nxt
        k = nxt
    return k


def cmvm(m: TikhonovMixture, mode: str = "exact") -> Tikhonov:
    """Project a mixture onto the closest single Tikhonov (KL sense).

    The output matches the mixture's circular mean and variance: its mean is
    the argument of the weighted resultant and its concentration solves
    I1(k)/I0(k) = |resultant| (closed-form inversion 1/(2k) = 1 - |resultant|
    on the approx path).  A resultant below UNIFORM_EPS yields the uniform
    density (k = 0).
    """
    m.validate()
    res = _mixture_resultant(m, mode)
    r = abs(res)
    if r < UNIFORM_EPS:
        return UNIFORM
    mu = math.atan2(res.imag, res.real)
    if mode == "approx":
        kappa = min(1.0 / (2.0 * (1.0 - min(r, 1.0 - 1e-16))), _KAPPA_MAX)
    else:
        kappa = _invert_bessel_ratio(r)
    return Tikhonov(kappa * complex(math.cos(mu), math.sin(mu)))


def tikhonov_product(a: Tikhonov, b: Tikhonov) -> Tikhonov:
    """Pointwise-normalized product of two Tikhonov densities: z = z_a + z_b (exact)."""
    return Tikhonov(a.z + b.z)


def gaussian_smooth(z, sigma_delta_sq: float):
    """Circular convolution of a Tikhonov with a Gaussian phase increment.

    Maps the natural parameter as z / (1 + sigma_delta_sq * |z|); exact in
    the no-noise limit and a close approximation of the wrapped-Gaussian
    convolution for moderate concentrations.
    """
    if sigma_delta_sq < 0:
        raise ValueError("sigma_delta_sq must be >= 0")
    if isinstance(z, complex):
        return z / (1.0 + sigma_delta_sq * abs(z))
    z = np.asarray(z, dtype=complex)
    return z / (1.0 + sigma_delta_sq * np.abs(z))


def tikhonov_kl(f: Tikhonov, g: Tikhonov, mode: str = "exact") -> float:
    """Closed-form KL divergence D(f || g) between two Tikhonov densities.

    D = log I0(k_g) - log I0(k_f) + rho(k_f) * (k_f - k_g cos(mu_f - mu_g)).
    """
    kf, kg = f.kappa, g.kappa
    rho = bessel_ratio(kf, mode)
    if kf < UNIFORM_EPS:
        cos_term = 0.0
    else:
        cos_term = math.cos(f.mu - g.mu)
    val = (log_bessel_i0(kg, mode) - log_bessel_i0(kf, mode)
           + rho * (kf - kg * cos_term))
    return max(val, 0.0)


def kl_divergence(f, g: Tikhonov, tol: float = 1e-9,
                  initial_points: int = 4096, max_points: int = 1 << 21) -> float:
    """KL divergence D(f || g) of a mixture (or single Tikhonov) from a Tikhonov.

    A single-Tikhonov f takes the closed form; mixtures are integrated by
    trapezoidal quadrature on the periodic domain, doubling the grid until
    successive refinements agree within tol.  Raises QuadratureError with
    the achieved tolerance if the refinement budget is exhausted.
    """
    if isinstance(f, Tikhonov):
        return tikhonov_kl(f, g)
    f.validate()
    prev = None
    n = initial_points
    while n <= max_points:
        theta = np.arange(n) * (TWO_PI / n)
        log_f = f.log_density(theta)
        log_g = g.log_density(theta)
        dens = np.exp(log_f)
        integrand = np.where(dens > 0, dens * (log_f - log_g), 0.0)
        val = float(np.sum(integrand) * (TWO_PI / n))
        if prev is not None and abs(val - prev) <= tol:
            return max(val, 0.0)
        prev = val
        n *= 2
    raise QuadratureError("KL quadrature did not converge", abs(val - prev))
