"""The full optimistic actor-critic loop: act with pi_E, store, learn, average targets, evaluate."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field, fields

import numpy as np

from .actor import GaussianPolicy, actor_update, make_policy
from .critic import TwinCritic, bound_action_gradient, make_twin_critic, td_update
from .envs import Env
from .explorer import oac_exploration, oac_exploration_det
from .funcapprox import polyak_update
from .replay import ReplayBuffer, Transition

MODES = ("oac", "oac_det", "sac_ablation", "lb_shift_ablation")
SMOOTHING_WINDOW = 100

# reset seeds: training episodes and evaluation episodes come from disjoint ranges
_TRAIN_SEED_STRIDE = 10 ** 7
_EVAL_SEED_OFFSET = 10 ** 13
_EVAL_SEED_STRIDE = 10 ** 4


@dataclass
class TrainConfig:
    gamma: float = 0.99
    tau: float = 0.005
    alpha: float = 0.2
    lr: float = 3e-4
    batch: int = 256
    buffer_capacity: int = 1_000_000
    gradient_steps: int = 1
    shift_multiplier: float = 6.86
    beta_ub: float = 4.66
    beta_lb: float = -3.65
    soft_target: bool = True
    initial_random_steps: int = 1000
    total_env_steps: int = 10_000
    eval_interval: int = 1000
    eval_episodes: int = 10
    seed: int = 0
    mode: str = "oac"
    hidden: tuple = (64, 64)

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if self.buffer_capacity < 1 or self.gradient_steps < 1:
            raise ValueError("buffer_capacity and gradient_steps must be >= 1")
        if self.lr <= 0 or self.alpha < 0 or self.shift_multiplier < 0:
            raise ValueError("lr must be positive, alpha and shift_multiplier non-negative")
        if min(self.initial_random_steps, self.total_env_steps) < 0:
            raise ValueError("step counts must be non-negative")
        if self.eval_interval < 1 or self.eval_episodes < 1:
            raise ValueError("eval_interval and eval_episodes must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.hidden or min(self.hidden) < 1:
            raise ValueError("hidden sizes must be positive")

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass
class TrainLog:
    env_step: list = field(default_factory=list)
    return_raw: list = field(default_factory=list)
    return_smooth: list = field(default_factory=list)
    shift_norm: list = field(default_factory=list)
    q1_loss: list = field(default_factory=list)
    q2_loss: list = field(default_factory=list)
    actor_loss: list = field(default_factory=list)
    policy: GaussianPolicy = None
    critic: TwinCritic = None

    COLUMNS = ("env_step", "return_raw", "return_smooth", "shift_norm", "q1_loss", "q2_loss", "actor_loss")

    def __len__(self):
        return len(self.env_step)

    def rows(self):
        return list(zip(*(getattr(self, name) for name in self.COLUMNS)))

    def append(self, env_step, return_raw, shift_norm, q1_loss, q2_loss, actor_loss):
        if self.env_step and env_step <= self.env_step[-1]:
            raise ValueError("env_step must increase")
        self.env_step.append(int(env_step))
        self.return_raw.append(float(return_raw))
        window = self.return_raw[-SMOOTHING_WINDOW:]
        self.return_smooth.append(float(np.mean(window)))
        self.shift_norm.append(float(shift_norm))
        self.q1_loss.append(float(q1_loss))
        self.q2_loss.append(float(q2_loss))
        self.actor_loss.append(float(actor_loss))


def exploration_means(mode: str, policy: GaussianPolicy, critic: TwinCritic, config: TrainConfig, states):
    """(mu_T, sigma_T, mu_E) for a batch of states under the given mode."""
    mu_t, sigma_t = policy.params(states)
    if mode == "sac_ablation":
        return mu_t, sigma_t, mu_t
    beta = config.beta_lb if mode == "lb_shift_ablation" else config.beta_ub
    grad = bound_action_gradient(critic, states, mu_t, beta)[0]
    if mode == "oac_det":
        return mu_t, sigma_t, oac_exploration_det(mu_t, grad, config.shift_multiplier)
    return mu_t, sigma_t, oac_exploration(mu_t, sigma_t, grad, config.shift_multiplier).mu_e


def select_action(mode: str, policy: GaussianPolicy, critic: TwinCritic, config: TrainConfig, s,
                  rng: np.random.Generator, env_step: int | None = None, action_low=None, action_high=None):
    """Behaviour action. Uniform over the box during warm-up when bounds and step are given."""
    if env_step is not None and env_step < config.initial_random_steps:
        if action_low is None or action_high is None:
            raise ValueError("warm-up sampling needs the action box")
        return rng.uniform(action_low, action_high)
    s = np.asarray(s, dtype=np.float64)
    _, sigma_t, mu_e = exploration_means(mode, policy, critic, config, s[None, :])
    if mode == "oac_det":
        return mu_e[0]
    return mu_e[0] + sigma_t[0] * rng.standard_normal(policy.act_dim)


def evaluate(policy: GaussianPolicy, env: Env, episodes: int, seed_base: int) -> float:
    """Mean undiscounted return of the deterministic policy a = mu_T(s)."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    total = 0.0
    for i in range(episodes):
        obs = env.reset(seed_base + i)
        done = False
        while not done:
            mu, _ = policy.params(obs)
            obs, r, done = env.step(mu)
            total += r
    return total / episodes


def train_seed(seed: int, episode: int) -> int:
    return seed * _TRAIN_SEED_STRIDE + episode


def eval_seed_base(seed: int) -> int:
    return _EVAL_SEED_OFFSET + seed * _EVAL_SEED_STRIDE


def init_agent(config: TrainConfig, env: Env, rng: np.random.Generator):
    spec = env.spec
    critic = make_twin_critic(spec.obs_dim, spec.act_dim, config.hidden, rng)
    policy = make_policy(spec.obs_dim, spec.act_dim, config.hidden, rng)
    return policy, critic


def train(config: TrainConfig, env: Env, callback=None) -> TrainLog:
    """Run ``config.total_env_steps`` interactions.

    ``callback(env_step, policy, critic)`` is invoked after the learning updates
    of every environment step.
    """
    rng = np.random.default_rng(config.seed)
    policy, critic = init_agent(config, env, rng)
    log = TrainLog(policy=policy, critic=critic)
    if config.total_env_steps == 0:
        return log

    spec = env.spec
    eval_env = copy.deepcopy(env)
    buffer = ReplayBuffer(min(config.buffer_capacity, config.total_env_steps), spec.obs_dim, spec.act_dim)
    episode = 0
    obs = env.reset(train_seed(config.seed, episode))
    losses = (np.nan, np.nan, np.nan)
    batch = None

    for t in range(config.total_env_steps):
        action = select_action(config.mode, policy, critic, config, obs, rng, t,
                               spec.action_low, spec.action_high)
        # the raw action is stored: clipping is part of the environment, so the critic
        # learns that actions beyond the box behave like the boundary
        obs_next, reward, done = env.step(action)
        terminal = done and env.terminal_on_done
        buffer.push(Transition(obs, action, reward, obs_next, terminal))
        if done:
            episode += 1
            obs = env.reset(train_seed(config.seed, episode))
        else:
            obs = obs_next

        for _ in range(config.gradient_steps):
            batch = buffer.sample_batch(config.batch, rng)
            q1_loss, q2_loss = td_update(critic, batch, policy, config.gamma, config.lr, config.alpha, rng,
                                         config.soft_target)
            report = actor_update(policy, critic, batch.s, config.alpha, config.beta_lb, config.lr, rng)
            polyak_update(critic.target1, critic.online1, config.tau)
            polyak_update(critic.target2, critic.online2, config.tau)
            losses = (q1_loss, q2_loss, report.loss)
            if not np.all(np.isfinite(losses)):
                raise FloatingPointError(f"non-finite loss at env step {t + 1}: {losses}")

        if callback is not None:
            callback(t + 1, policy, critic)

        if (t + 1) % config.eval_interval == 0:
            ret = evaluate(policy, eval_env, config.eval_episodes, eval_seed_base(config.seed))
            log.append(t + 1, ret, batch_shift_norm(config, policy, critic, batch.s), *losses)
    return log


def batch_shift_norm(config: TrainConfig, policy: GaussianPolicy, critic: TwinCritic, states) -> float:
    """Mean over a minibatch of ||mu_E(s) - mu_T(s)||."""
    mu_t, _, mu_e = exploration_means(config.mode, policy, critic, config, states)
    return float(np.mean(np.linalg.norm(mu_e - mu_t, axis=-1)))
