"""Small continuous-control tasks with closed-form dynamics.

All environments clip actions into their box before use, and are deterministic
given the reset seed. ``step`` returns ``(obs, reward, done)``; ``done`` is True
on the last step of an episode. ``terminal_on_done`` tells the learner whether
that end is a true MDP terminal (bandits) or a horizon cut-off (pendulum).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnvSpec:
    obs_dim: int
    act_dim: int
    action_low: np.ndarray
    action_high: np.ndarray
    max_episode_steps: int

    def __post_init__(self):
        if self.obs_dim < 1 or self.act_dim < 1:
            raise ValueError("obs_dim and act_dim must be >= 1")
        low = np.asarray(self.action_low, dtype=np.float64)
        high = np.asarray(self.action_high, dtype=np.float64)
        if low.shape != (self.act_dim,) or high.shape != (self.act_dim,) or not np.all(low < high):
            raise ValueError("action bounds must have act_dim entries with low < high")
        object.__setattr__(self, "action_low", low)
        object.__setattr__(self, "action_high", high)


class Env:
    spec: EnvSpec
    terminal_on_done = True

    def __init__(self):
        self.steps = 0
        self._state = None

    def clip(self, action) -> np.ndarray:
        action = np.asarray(action, dtype=np.float64).reshape(self.spec.act_dim)
        if not np.all(np.isfinite(action)):
            raise ValueError(f"non-finite action {action}")
        return np.clip(action, self.spec.action_low, self.spec.action_high)

    def reset(self, seed: int) -> np.ndarray:
        self.steps = 0
        self._state = self._initial_state(np.random.default_rng(seed))
        return self._observe()

    def step(self, action):
        if self._state is None:
            raise RuntimeError("call reset() before step()")
        if self.steps >= self.spec.max_episode_steps:
            raise RuntimeError("episode already finished; call reset()")
        a = self.clip(action)
        reward = float(self._advance(a))
        self.steps += 1
        return self._observe(), reward, self.steps >= self.spec.max_episode_steps

    def _initial_state(self, rng):
        raise NotImplementedError

    def _advance(self, action):
        raise NotImplementedError

    def _observe(self):
        raise NotImplementedError

    def params(self) -> dict:
        """Constructor keyword arguments, for config serialisation."""
        return {}


class _Bandit(Env):
    def _initial_state(self, rng):
        return np.zeros(1)

    def _observe(self):
        return np.zeros(1)

    def _advance(self, action):
        return self.reward(action)

    def reward(self, action):
        raise NotImplementedError


# a narrow local bump where an untrained policy starts, and a broad, higher one at 3.5
# whose tail is almost flat near 0, so a policy that never looks beyond its own
# samples has no gradient pointing at it
DEFAULT_BUMPS = ((0.0, 1.0, 0.3), (3.5, 1.3, 1.2))


class RbfBandit(_Bandit):
    """One-step bandit with reward ``sum_i h_i exp(-(a - c_i)^2 / (2 w_i^2)) + slope * a``."""

    def __init__(self, bumps=DEFAULT_BUMPS, slope: float = 0.0, low: float = -5.0, high: float = 5.0):
        super().__init__()
        self.bumps = tuple((float(c), float(h), float(w)) for c, h, w in bumps)
        if any(w <= 0 for _, _, w in self.bumps):
            raise ValueError("bump widths must be positive")
        self.slope = float(slope)
        self.spec = EnvSpec(1, 1, np.array([low]), np.array([high]), 1)

    def reward(self, action):
        """Reward of a scalar action (float) or of an array of actions (elementwise)."""
        scalar = np.ndim(action) == 0 or np.size(action) == 1
        a = np.asarray(action, dtype=np.float64).reshape(-1)[0] if scalar else np.asarray(action, dtype=np.float64)
        total = self.slope * a
        for c, h, w in self.bumps:
            total = total + h * np.exp(-((a - c) ** 2) / (2.0 * w * w))
        return float(total) if scalar else total

    def optimum(self, grid: int = 200001):
        """(argmax, max) of the reward over the action box, by dense grid search."""
        a = np.linspace(self.spec.action_low[0], self.spec.action_high[0], grid)
        r = self.reward(a)
        i = int(np.argmax(r))
        return float(a[i]), float(r[i])

    def params(self):
        return {"bumps": self.bumps, "slope": self.slope}


class QuadraticBandit(_Bandit):
    """Reward ``-a^2`` on ``[-5, 5]``."""

    def __init__(self, low: float = -5.0, high: float = 5.0):
        super().__init__()
        self.spec = EnvSpec(1, 1, np.array([low]), np.array([high]), 1)

    def reward(self, action):
        return float(-np.asarray(action, dtype=np.float64).reshape(-1)[0] ** 2)


def wrap_angle(theta):
    return (theta + np.pi) % (2.0 * np.pi) - np.pi


class Pendulum(Env):
    """Torque-limited swing-up; angle 0 is upright. Observation (cos, sin, angular velocity)."""

    terminal_on_done = False
    dt = 0.05
    g = 10.0
    m = 1.0
    l = 1.0
    max_speed = 8.0
    max_torque = 2.0

    def __init__(self, max_episode_steps: int = 200):
        super().__init__()
        self.spec = EnvSpec(3, 1, np.array([-self.max_torque]), np.array([self.max_torque]),
                            int(max_episode_steps))

    def _initial_state(self, rng):
        # (-pi, pi] for the angle, (-1, 1) for the velocity
        theta = np.pi - rng.uniform(0.0, 2.0 * np.pi)
        theta_dot = rng.uniform(-1.0, 1.0)
        return np.array([theta, theta_dot])

    def set_state(self, theta: float, theta_dot: float) -> np.ndarray:
        self.steps = 0
        self._state = np.array([theta, theta_dot], dtype=np.float64)
        return self._observe()

    def _observe(self):
        theta, theta_dot = self._state
        return np.array([np.cos(theta), np.sin(theta), theta_dot])

    def _advance(self, action):
        theta, theta_dot = self._state
        u = action[0]
        cost = wrap_angle(theta) ** 2 + 0.1 * theta_dot ** 2 + 0.001 * u ** 2
        theta_dot = theta_dot + (3.0 * self.g / (2.0 * self.l) * np.sin(theta)
                                 + 3.0 / (self.m * self.l ** 2) * u) * self.dt
        theta_dot = float(np.clip(theta_dot, -self.max_speed, self.max_speed))
        theta = theta + theta_dot * self.dt
        self._state = np.array([theta, theta_dot])
        return -cost

    def params(self):
        return {"max_episode_steps": self.spec.max_episode_steps}


ENVS = {"rbf_bandit": RbfBandit, "quadratic_bandit": QuadraticBandit, "pendulum": Pendulum}


def make_env(name: str, **kwargs) -> Env:
    try:
        cls = ENVS[name]
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(ENVS)}") from None
    return cls(**kwargs)
