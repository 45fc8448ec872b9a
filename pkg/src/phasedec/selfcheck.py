"""Built-in verification suites for the `phasedec selfcheck` subcommand.

Smaller-scale versions of the acceptance checks that matter most in the
field: mixture-reduction optimality against a brute-force grid, Bessel
approximation accuracy, and grid-refinement convergence of the discrete-
phase baseline.
"""

from __future__ import annotations

import math

import numpy as np

from .channel import ChannelParams, apply_channel, modulate, pilot_mask_for, Frame
from .directional import (TWO_PI, Tikhonov, TikhonovMixture, cmvm,
                          bessel_ratio, log_bessel_i0, log_i0_asymptotic,
                          bessel_ratio_asymptotic, LOG_I0_APPROX_MIN_K,
                          RATIO_APPROX_MIN_K)
from .trackers import TrackerConfig, dp_pass


def random_mixture(rng, max_components: int = 8) -> TikhonovMixture:
    n = int(rng.integers(2, max_components + 1))
    kappas = np.exp(rng.uniform(math.log(0.5), math.log(200.0), n))
    mus = rng.uniform(0, TWO_PI, n)
    w = rng.dirichlet(np.ones(n))
    return TikhonovMixture(w, kappas * np.exp(1j * mus))


def kl_to_tikhonov_grid(mix: TikhonovMixture, n_mu: int, n_kappa: int,
                        quad_points: int = 4096):
    """Min over a (mu, kappa) grid of D(mix || Tikhonov), by quadrature.

    D(f||g) = int f log f  -  Re[z_g * conj(m1)] + log(2 pi I0(|z_g|)) where
    m1 is the first trigonometric moment of f, so one quadrature sweep
    serves the whole grid.
    """
    theta = np.arange(quad_points) * (TWO_PI / quad_points)
    log_f = mix.log_density(theta)
    f = np.exp(log_f)
    dt = TWO_PI / quad_points
    entropy_term = float(np.sum(np.where(f > 0, f * log_f, 0.0)) * dt)
    m1 = complex(np.sum(f * np.exp(1j * theta)) * dt)
    mus = np.arange(n_mu) * (TWO_PI / n_mu)
    kappas = np.exp(np.linspace(math.log(1e-2), math.log(2e3), n_kappa))
    cross = (np.outer(np.cos(mus), kappas) * m1.real
             + np.outer(np.sin(mus), kappas) * m1.imag)
    norm = np.log(TWO_PI) + log_bessel_i0(kappas, "exact")
    grid = entropy_term - cross + norm[None, :]
    best = np.unravel_index(np.argmin(grid), grid.shape)
    return float(grid[best]), entropy_term, m1


def kl_of_candidate(entropy_term: float, m1: complex, g: Tikhonov) -> float:
    cross = (g.z * m1.conjugate()).real
    return entropy_term - cross + math.log(TWO_PI) + log_bessel_i0(g.kappa, "exact")


def check_cmvm_optimality(n_mixtures: int = 20, n_mu: int = 360,
                          n_kappa: int = 120, tol: float = 1e-3,
                          seed: int = 7) -> bool:
    rng = np.random.default_rng(seed)
    for _ in range(n_mixtures):
        mix = random_mixture(rng)
        grid_best, entropy_term, m1 = kl_to_tikhonov_grid(mix, n_mu, n_kappa)
        ours = kl_of_candidate(entropy_term, m1, cmvm(mix, "exact"))
        if ours > grid_best + tol:
            return False
    return True


def check_bessel_accuracy(n_points: int = 2000) -> bool:
    k = np.exp(np.linspace(math.log(2.0), math.log(1e4), n_points))
    log_err = np.abs(log_bessel_i0(k, "approx") - log_bessel_i0(k, "exact"))
    exact_ratio = bessel_ratio(k, "exact")
    ratio_err = np.abs(bessel_ratio(k, "approx") - exact_ratio) / exact_ratio
    return bool(np.all(log_err <= 0.006) and np.all(ratio_err <= 0.01))


def check_dp_refinement(levels=(64, 128, 256), seed: int = 3) -> bool:
    params = ChannelParams(m=2, sigma_delta=0.1, es_n0_db=7.0)
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, 30)
    frame = modulate(bits, params, pilot_spacing=8)
    frame = apply_channel(frame, params, rng)
    pd = np.full((len(frame), 2), 0.5)
    pus = []
    for lv in list(levels) + [2 * levels[-1]]:
        cfg = TrackerConfig(algorithm="dp", dp_levels=lv)
        pus.append(dp_pass(frame, pd, cfg, params.sigma2, params.sigma_delta))
    tvs = [0.5 * np.abs(a - b).sum(axis=1).mean() for a, b in zip(pus, pus[1:])]
    return all(b <= a + 1e-12 for a, b in zip(tvs, tvs[1:])) and tvs[-1] < 0.02


def run(emit=print) -> int:
    suites = (
        ("cmvm-optimality", check_cmvm_optimality),
        ("bessel-accuracy", check_bessel_accuracy),
        ("dp-refinement", check_dp_refinement),
    )
    failed = 0
    for name, fn in suites:
        ok = fn()
        emit(f"{name}: {'PASS' if ok else 'FAIL'}")
        failed += 0 if ok else 1
    return 1 if failed else 0
