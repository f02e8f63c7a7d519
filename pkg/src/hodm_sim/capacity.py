"""Rician fading around the deterministic block gains and water-filling
capacity under an average total-power constraint.

The deterministic grid anchors a Rician ensemble: each realization is
sqrt(K/(K+1)) * h + sqrt(1/(K+1)) * |h| * g with g ~ CN(0, 1), preserving
the mean block power.  The water level is set once for the whole ensemble
by bisection so that the ensemble-average allocated power meets the budget;
per-realization totals are allowed to fluctuate (a per-realization mode that
re-solves every draw is available for comparison).
"""

from __future__ import annotations

import math

import numpy as np


def draw_rician_ensemble(gains: np.ndarray, k_db: float, count: int,
                         rng) -> np.ndarray:
    """Fading realizations around a deterministic gain grid.

    Returns an array of shape (count,) + gains.shape whose per-block mean
    power equals |gains|^2 for any Rician factor K = 10**(k_db/10).
    """
    if count < 1:
        raise ValueError("need at least one realization")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    gains = np.asarray(gains, dtype=complex)
    k = 10.0 ** (k_db / 10.0)
    det = math.sqrt(k / (k + 1.0)) * gains
    scatter = math.sqrt(1.0 / (k + 1.0)) * np.abs(gains)
    shape = (count,) + gains.shape
    g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        / math.sqrt(2.0)
    return det[None, ...] + scatter[None, ...] * g


def waterfill(gain_sq: np.ndarray, noise_variance: float,
              water_level: float) -> tuple[np.ndarray, float]:
    """Allocate power against one realization at a given water level.

    Each block gets max(0, level - sigma^2/g); zero-gain blocks get zero.
    Returns (powers, capacity in bits) with capacity the sum of
    log2(1 + g * p / sigma^2) over blocks.  Active blocks satisfy
    p + sigma^2/g == level exactly (the complementary-slackness equality).
    """
    if water_level < 0:
        raise ValueError("water level must be nonnegative")
    g = np.asarray(gain_sq, dtype=float)
    with np.errstate(divide="ignore"):
        floor = np.where(g > 0.0, noise_variance / np.where(g > 0, g, 1.0),
                         np.inf)
    powers = np.maximum(0.0, water_level - floor)
    capacity = float(np.sum(np.log2(1.0 + g * powers / noise_variance)))
    return powers, capacity


def find_water_level(ensemble_gain_sq: np.ndarray, noise_variance: float,
                     budget: float, rtol: float = 1e-9,
                     max_iter: int = 200) -> float:
    """Water level meeting the budget in ensemble average, by bisection.

    ensemble_gain_sq has shape (realizations, ...blocks...).  The returned
    level makes mean_r sum_blocks (level - sigma^2/g)^+ equal the budget to
    the requested relative tolerance.  A single realization reduces to the
    classic instantaneous allocation.
    """
    if budget <= 0:
        raise ValueError("power budget must be positive")
    g = np.asarray(ensemble_gain_sq, dtype=float)
    g = g.reshape(g.shape[0], -1)
    if not np.any(g > 0.0):
        raise ValueError("cannot bracket a water level: all gains are zero")
    with np.errstate(divide="ignore"):
        floor = np.where(g > 0.0, noise_variance / np.where(g > 0, g, 1.0),
                         np.inf)

    def mean_total(level: float) -> float:
        return float(np.mean(np.sum(np.maximum(0.0, level - floor), axis=1)))

    lo = 0.0
    hi = budget + float(np.min(floor))
    for _ in range(200):
        if mean_total(hi) >= budget:
            break
        hi *= 2.0
    else:
        raise ValueError("failed to bracket the water level")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mean_total(mid) < budget:
            lo = mid
        else:
            hi = mid
        if abs(mean_total(hi) - budget) <= rtol * budget:
            return hi
    return hi


def ergodic_capacity(ensemble_gain_sq: np.ndarray, noise_variance: float,
                     budget: float, per_realization: bool = False,
                     rtol: float = 1e-9) -> tuple[float, float]:
    """Mean water-filled capacity over the fading ensemble, with stderr.

    The default charges one ensemble-wide water level (average power meets
    the budget; instantaneous totals fluctuate with the fading).
    per_realization re-solves the level for every draw so each realization
    spends exactly the budget.
    """
    g = np.asarray(ensemble_gain_sq, dtype=float)
    g = g.reshape(g.shape[0], -1)
    caps = np.empty(g.shape[0])
    if per_realization:
        for i in range(g.shape[0]):
            level = find_water_level(g[i:i + 1], noise_variance, budget, rtol)
            _, caps[i] = waterfill(g[i], noise_variance, level)
    else:
        level = find_water_level(g, noise_variance, budget, rtol)
        for i in range(g.shape[0]):
            _, caps[i] = waterfill(g[i], noise_variance, level)
    stderr = caps.std(ddof=1) / math.sqrt(caps.size) if caps.size > 1 else 0.0
    return float(caps.mean()), float(stderr)


def ergodic_capacity_hodm(ensemble_gains: np.ndarray, noise_variance: float,
                          budget: float,
                          per_realization: bool = False) -> tuple[float, float]:
    """Capacity of the full (mode x subcarrier) grid, bits per frame."""
    return ergodic_capacity(np.abs(ensemble_gains) ** 2, noise_variance,
                            budget, per_realization)


def ergodic_capacity_ofdm(ensemble_subcarrier_gains: np.ndarray,
                          noise_variance: float, budget: float,
                          per_realization: bool = False) -> tuple[float, float]:
    """Single-mode baseline: the same machinery over subcarriers only.

    ensemble_subcarrier_gains has shape (realizations, M); by convention the
    baseline uses the mode-0 row of the block grid (one ring-fed stream),
    overridable by passing any other gain set.
    """
    return ergodic_capacity(np.abs(ensemble_subcarrier_gains) ** 2,
                            noise_variance, budget, per_realization)


def allocated_powers(ensemble_gain_sq: np.ndarray, noise_variance: float,
                     budget: float) -> tuple[np.ndarray, float]:
    """Per-realization block powers under the ensemble-wide level.

    Returns (powers with the ensemble's shape, water level).
    """
    g = np.asarray(ensemble_gain_sq, dtype=float)
    flat = g.reshape(g.shape[0], -1)
    level = find_water_level(flat, noise_variance, budget)
    with np.errstate(divide="ignore"):
        floor = np.where(g > 0.0, noise_variance / np.where(g > 0, g, 1.0),
                         np.inf)
    return np.maximum(0.0, level - floor), level
