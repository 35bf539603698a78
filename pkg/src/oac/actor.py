"""Diagonal Gaussian target policy and its entropy-regularised lower-bound update."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .critic import TwinCritic, bound_action_gradient
from .funcapprox import AdamState, adam_step, init_mlp, mlp_forward, mlp_value_and_grad

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass
class GaussianPolicy:
    """Trunk maps a state to ``[mean, log_std]``; the log-std head is clamped."""

    trunk: MlpParams
    act_dim: int
    adam: AdamState
    log_std_min: float = LOG_STD_MIN
    log_std_max: float = LOG_STD_MAX

    def __post_init__(self):
        if self.trunk.out_dim != 2 * self.act_dim:
            raise ValueError("policy trunk must output 2 * act_dim values")

    @property
    def obs_dim(self) -> int:
        return self.trunk.in_dim

    def _heads(self, s):
        out = mlp_forward(self.trunk, s)
        return out[..., :self.act_dim], out[..., self.act_dim:]

    def params(self, s):
        mu, raw = self._heads(s)
        return mu, np.exp(np.clip(raw, self.log_std_min, self.log_std_max))

    def sample(self, s, eps):
        mu, sigma = self.params(s)
        return mu + sigma * eps

    def log_prob(self, s, a):
        mu, sigma = self.params(s)
        z = (np.asarray(a, dtype=np.float64) - mu) / sigma
        return self.log_prob_of_noise(sigma, z)

    @staticmethod
    def log_prob_of_noise(sigma, eps):
        """Log-density of ``mu + sigma * eps``; only sigma and the standardised noise matter."""
        return np.sum(-0.5 * eps * eps - np.log(sigma) - HALF_LOG_2PI, axis=-1)


def make_policy(obs_dim: int, act_dim: int, hidden, rng: np.random.Generator) -> GaussianPolicy:
    trunk = init_mlp([obs_dim, *hidden, 2 * act_dim], rng)
    return GaussianPolicy(trunk, act_dim, AdamState.for_params(trunk))


def policy_params(p: GaussianPolicy, s):
    return p.params(s)


def sample_reparam(p: GaussianPolicy, s, eps):
    return p.sample(s, eps)


def log_prob(p: GaussianPolicy, s, a):
    return p.log_prob(s, a)


def gaussian_entropy(sigma) -> np.ndarray:
    return np.sum(np.log(sigma) + 0.5 * np.log(2.0 * np.pi * np.e), axis=-1)


@dataclass
class ActorLossReport:
    loss: float
    entropy: float
    grad_norm: float


def actor_objective(p: GaussianPolicy, c: TwinCritic, states, eps, alpha: float, beta_lb: float):
    """Batch mean of ``Q'_LB(s, mu + sigma*eps) - alpha log pi(mu + sigma*eps | s)`` and its trunk gradient.

    With the noise held fixed, ``log pi`` of the reparameterised sample equals
    ``-sum log sigma`` plus a constant, so the entropy term only reaches the
    log-std head.
    """
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    eps = np.atleast_2d(np.asarray(eps, dtype=np.float64))
    n = len(states)
    stats = {}

    def upstream(out):
        mu, raw = out[:, :p.act_dim], out[:, p.act_dim:]
        log_sigma = np.clip(raw, p.log_std_min, p.log_std_max)
        sigma = np.exp(log_sigma)
        grad_a, q1, q2 = bound_action_gradient(c, states, mu + sigma * eps, beta_lb)
        q_lb = 0.5 * (q1 + q2) + beta_lb * 0.5 * np.abs(q1 - q2)
        logp = np.sum(-0.5 * eps * eps - log_sigma - HALF_LOG_2PI, axis=-1)
        stats["objective"] = float(np.mean(q_lb - alpha * logp))
        stats["entropy"] = float(-np.mean(logp))
        inside = (raw > p.log_std_min) & (raw < p.log_std_max)
        d_raw = (grad_a * sigma * eps + alpha) * inside
        return np.concatenate([grad_a, d_raw], axis=-1) / n

    grads = mlp_value_and_grad(p.trunk, states, upstream)[1].params
    return stats["objective"], grads, stats["entropy"]


def actor_update(p: GaussianPolicy, c: TwinCritic, states, alpha: float, beta_lb: float, lr: float,
                 rng: np.random.Generator) -> ActorLossReport:
    """One Adam ascent step on the lower-bound + entropy objective; critics are untouched."""
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    if len(states) == 0:
        raise ValueError("empty state batch")
    eps = rng.standard_normal((len(states), p.act_dim))
    objective, grads, entropy = actor_objective(p, c, states, eps, alpha, beta_lb)
    if not np.isfinite(objective):
        raise FloatingPointError("non-finite actor objective")
    grad_norm = float(np.linalg.norm(grads.vector))
    if lr > 0:
        np.negative(grads.vector, out=grads.vector)
        adam_step(p.adam, p.trunk, grads, lr)
    return ActorLossReport(-objective, entropy, grad_norm)
