"""Optimistic exploration: the KL-constrained shift of the policy mean.

Given the target policy N(mu_T, diag(sigma_T^2)) and the action-gradient g of
the critic upper bound at mu_T, the exploration policy maximises the linearised
upper bound subject to KL(pi_E || pi_T) <= delta. The solution keeps the
covariance and moves the mean to

    mu_E = mu_T + sqrt(2 delta) * Sigma_T g / ||g||_Sigma_T .

All functions work on the last axis, so batches of states can be handled at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEGENERATE_NORM = 1e-12


@dataclass
class ExplorationPolicy:
    mu_e: np.ndarray
    sigma_e: np.ndarray


@dataclass
class ShiftReport:
    shift: np.ndarray
    norm: float
    divergence: float


def kl_gaussian_diag(mu1, sigma1, mu2, sigma2) -> float:
    """KL(N(mu1, diag sigma1^2) || N(mu2, diag sigma2^2)), summed over the last axis."""
    mu1, sigma1, mu2, sigma2 = (np.asarray(x, dtype=np.float64) for x in (mu1, sigma1, mu2, sigma2))
    if np.any(sigma1 <= 0) or np.any(sigma2 <= 0):
        raise ValueError("standard deviations must be positive")
    ratio = (sigma1 / sigma2) ** 2
    terms = ratio - 1.0 + 2.0 * np.log(sigma2 / sigma1) + ((mu1 - mu2) / sigma2) ** 2
    return 0.5 * terms.sum(axis=-1)


def wasserstein_dirac(mu1, mu2) -> float:
    mu1, mu2 = np.asarray(mu1, dtype=np.float64), np.asarray(mu2, dtype=np.float64)
    if mu1.shape != mu2.shape:
        raise ValueError(f"shape mismatch {mu1.shape} vs {mu2.shape}")
    return 0.5 * np.sum((mu1 - mu2) ** 2, axis=-1)


def _check_inputs(grad, shift_multiplier):
    grad = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise ValueError("non-finite upper-bound gradient")
    if not shift_multiplier >= 0:
        raise ValueError(f"shift multiplier must be >= 0, got {shift_multiplier}")
    return grad


def oac_exploration(mu_t, sigma_t, grad_ub, shift_multiplier: float) -> ExplorationPolicy:
    """Closed-form exploration policy; ``shift_multiplier`` is sqrt(2 delta)."""
    mu_t = np.asarray(mu_t, dtype=np.float64)
    sigma_t = np.asarray(sigma_t, dtype=np.float64)
    g = _check_inputs(grad_ub, shift_multiplier)
    if np.any(sigma_t <= 0):
        raise ValueError("sigma_t must be positive")
    sigma_g = sigma_t ** 2 * g
    norm = np.sqrt(np.sum(g * sigma_g, axis=-1, keepdims=True))
    ok = norm > DEGENERATE_NORM
    scale = np.where(ok, shift_multiplier / np.where(ok, norm, 1.0), 0.0)
    return ExplorationPolicy(mu_t + scale * sigma_g, sigma_t.copy())


def oac_exploration_det(mu_t, grad_ub, shift_multiplier: float) -> np.ndarray:
    """Deterministic variant: unit Euclidean step of length ``shift_multiplier`` along g."""
    mu_t = np.asarray(mu_t, dtype=np.float64)
    g = _check_inputs(grad_ub, shift_multiplier)
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    ok = norm > DEGENERATE_NORM
    scale = np.where(ok, shift_multiplier / np.where(ok, norm, 1.0), 0.0)
    return mu_t + scale * g


def shift_report(mu_e, mu_t, sigma_t=None) -> ShiftReport:
    """Shift statistics; KL when ``sigma_t`` is given, else the Dirac Wasserstein value."""
    shift = np.asarray(mu_e, dtype=np.float64) - np.asarray(mu_t, dtype=np.float64)
    if sigma_t is None:
        div = wasserstein_dirac(mu_e, mu_t)
    else:
        div = kl_gaussian_diag(mu_e, sigma_t, mu_t, sigma_t)
    return ShiftReport(shift, float(np.linalg.norm(shift)), float(div))


def oracle_solve(mu_t, sigma_t, linear_coeffs, delta: float, max_iter: int = 400) -> np.ndarray:
    """Maximise ``coeffs . mu`` over the KL ball by bisection on the Lagrange multiplier.

    Stationarity gives mu(lam) = mu_T + Sigma_T g / lam, and the active
    constraint 0.5 (mu - mu_T)^T Sigma_T^-1 (mu - mu_T) = delta is solved for
    lam numerically (geometric bisection), without the closed-form root.
    """
    mu_t = np.asarray(mu_t, dtype=np.float64)
    var = np.asarray(sigma_t, dtype=np.float64) ** 2
    g = np.asarray(linear_coeffs, dtype=np.float64)
    if not delta > 0:
        raise ValueError("delta must be positive")
    if np.sqrt(np.sum(var * g * g)) <= DEGENERATE_NORM:
        return mu_t.copy()

    def excess(lam):
        step = var * g / lam
        return 0.5 * np.sum(step * step / var) - delta

    lo, hi = 1.0, 1.0
    for _ in range(2000):
        if excess(lo) > 0:
            break
        lo *= 0.5
    else:
        raise ArithmeticError("could not bracket the multiplier from below")
    for _ in range(2000):
        if excess(hi) < 0:
            break
        hi *= 2.0
    else:
        raise ArithmeticError("could not bracket the multiplier from above")

    for _ in range(max_iter):
        mid = np.sqrt(lo * hi)
        if mid <= lo or mid >= hi:
            break
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    lam = np.sqrt(lo * hi)
    return mu_t + var * g / lam
