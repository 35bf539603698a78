"""Twin bootstrapped critics, their bound estimates and TD learning."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .funcapprox import AdamState, MlpParams, adam_step, init_mlp, mlp_forward, mlp_value_and_grad


@dataclass
class TwinCritic:
    online1: MlpParams
    online2: MlpParams
    target1: MlpParams
    target2: MlpParams
    adam1: AdamState
    adam2: AdamState
    obs_dim: int
    act_dim: int

    @classmethod
    def from_onlines(cls, online1: MlpParams, online2: MlpParams, obs_dim: int, act_dim: int):
        if [a.shape for a in online1.arrays()] != [a.shape for a in online2.arrays()]:
            raise ValueError("both critics must share one architecture")
        if online1.in_dim != obs_dim + act_dim or online1.out_dim != 1:
            raise ValueError("critic must map obs_dim + act_dim inputs to a scalar")
        return cls(online1, online2, online1.copy(), online2.copy(),
                   AdamState.for_params(online1), AdamState.for_params(online2), obs_dim, act_dim)

    def nets(self):
        return self.online1, self.online2, self.target1, self.target2


def make_twin_critic(obs_dim: int, act_dim: int, hidden, rng: np.random.Generator) -> TwinCritic:
    sizes = [obs_dim + act_dim, *hidden, 1]
    return TwinCritic.from_onlines(init_mlp(sizes, rng), init_mlp(sizes, rng), obs_dim, act_dim)


@dataclass
class BoundEstimates:
    mean: np.ndarray
    std: np.ndarray
    ub: np.ndarray
    lb_prime: np.ndarray


def _join(c: TwinCritic, s, a) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if s.shape[-1] != c.obs_dim or a.shape[-1] != c.act_dim:
        raise ValueError(f"state {s.shape} / action {a.shape} do not match critic dims "
                         f"({c.obs_dim}, {c.act_dim})")
    if s.ndim != a.ndim:
        lead = np.broadcast_shapes(s.shape[:-1], a.shape[:-1])
        s = np.broadcast_to(s, lead + s.shape[-1:])
        a = np.broadcast_to(a, lead + a.shape[-1:])
    return np.concatenate([s, a], axis=-1)


def q_values(c: TwinCritic, s, a, target: bool = False):
    x = _join(c, s, a)
    n1, n2 = (c.target1, c.target2) if target else (c.online1, c.online2)
    return mlp_forward(n1, x)[..., 0], mlp_forward(n2, x)[..., 0]


def bound_estimates(q1, q2, beta_ub: float, beta_lb: float) -> BoundEstimates:
    """Mean and population std of the two bootstraps, and the two shifted bounds."""
    q1, q2 = np.asarray(q1, dtype=np.float64), np.asarray(q2, dtype=np.float64)
    mean = 0.5 * (q1 + q2)
    std = 0.5 * np.abs(q1 - q2)
    return BoundEstimates(mean, std, mean + beta_ub * std, mean + beta_lb * std)


def bounds(c: TwinCritic, s, a, beta_ub: float, beta_lb: float) -> BoundEstimates:
    return bound_estimates(*q_values(c, s, a), beta_ub, beta_lb)


def bound_action_gradient(c: TwinCritic, s, a, beta: float):
    """Action-gradient of ``Q_mean + beta * Q_std`` at (s, a), plus the two q values.

    The std term contributes ``beta * sign(q1 - q2) * (g1 - g2) / 2``, which is
    zero on the tie set q1 == q2.
    """
    x = _join(c, s, a)
    q1, b1 = mlp_value_and_grad(c.online1, x, np.ones_like)
    q2, b2 = mlp_value_and_grad(c.online2, x, np.ones_like)
    q1, q2 = q1[..., 0], q2[..., 0]
    g1 = b1.input[..., c.obs_dim:]
    g2 = b2.input[..., c.obs_dim:]
    sign = np.sign(q1 - q2)[..., None]
    return 0.5 * (g1 + g2) + beta * sign * 0.5 * (g1 - g2), q1, q2


def ub_action_gradient(c: TwinCritic, s, mu_t, beta_ub: float) -> np.ndarray:
    return bound_action_gradient(c, s, mu_t, beta_ub)[0]


def td_targets(c: TwinCritic, batch, policy, gamma: float, alpha: float, rng: np.random.Generator,
               soft_target: bool = True) -> np.ndarray:
    """y = r + gamma (1 - done) [min of target critics - alpha log pi], one next action per row."""
    s_next = np.asarray(batch.s_next, dtype=np.float64)
    eps = rng.standard_normal((len(batch.r), c.act_dim))
    mu, sigma = policy.params(s_next)
    a_next = mu + sigma * eps
    tq1, tq2 = q_values(c, s_next, a_next, target=True)
    v_next = np.minimum(tq1, tq2)
    if soft_target:
        v_next = v_next - alpha * policy.log_prob_of_noise(sigma, eps)
    return np.asarray(batch.r, dtype=np.float64) + gamma * (1.0 - np.asarray(batch.done)) * v_next


def td_update(c: TwinCritic, batch, policy, gamma: float, lr: float, alpha: float,
              rng: np.random.Generator, soft_target: bool = True):
    """One Adam step per online critic on the squared TD error; returns pre-update losses."""
    if len(batch.r) == 0:
        raise ValueError("empty batch")
    y = td_targets(c, batch, policy, gamma, alpha, rng, soft_target)
    if not np.all(np.isfinite(y)):
        raise FloatingPointError("non-finite TD target; critic left unchanged")
    x = _join(c, batch.s, batch.a)
    n = len(y)
    losses, steps = [], []
    for net, adam in ((c.online1, c.adam1), (c.online2, c.adam2)):
        q, back = mlp_value_and_grad(net, x, lambda out: (2.0 / n) * (out - y[:, None]))
        losses.append(float(np.mean((q[:, 0] - y) ** 2)))
        steps.append((adam, net, back.params))
    for adam, net, grads in steps:
        adam_step(adam, net, grads, lr)
    return losses[0], losses[1]


def critic_slice(c: TwinCritic, s, center, direction, halfwidth: float, n: int,
                 beta_ub: float, beta_lb: float, action_low=None, action_high=None) -> np.ndarray:
    """Rows ``(offset, mean, ub, lb)`` along a ray through ``center``, cut to the action box."""
    direction = np.asarray(direction, dtype=np.float64)
    length = np.linalg.norm(direction)
    if length == 0:
        raise ValueError("ray direction must be nonzero")
    if n < 1:
        raise ValueError("need at least one point")
    u = direction / length
    center = np.asarray(center, dtype=np.float64)
    t_lo, t_hi = -float(halfwidth), float(halfwidth)
    if action_low is not None and action_high is not None:
        low, high = np.asarray(action_low, dtype=np.float64), np.asarray(action_high, dtype=np.float64)
        center = np.clip(center, low, high)
        for ui, ci, lo, hi in zip(u, center, low, high):
            if ui > 0:
                t_lo, t_hi = max(t_lo, (lo - ci) / ui), min(t_hi, (hi - ci) / ui)
            elif ui < 0:
                t_lo, t_hi = max(t_lo, (hi - ci) / ui), min(t_hi, (lo - ci) / ui)
    offsets = np.array([0.0]) if n == 1 else np.linspace(t_lo, t_hi, n)
    actions = center + offsets[:, None] * u
    s_rep = np.broadcast_to(np.asarray(s, dtype=np.float64), (n, c.obs_dim))
    est = bounds(c, s_rep, actions, beta_ub, beta_lb)
    return np.column_stack([offsets, est.mean, est.ub, est.lb_prime])
