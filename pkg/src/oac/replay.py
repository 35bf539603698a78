"""Fixed-capacity ring buffer of transitions with uniform sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    done: bool


@dataclass
class Batch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    done: np.ndarray

    def __len__(self):
        return len(self.r)

    @classmethod
    def from_transitions(cls, items) -> "Batch":
        items = list(items)
        return cls(np.array([t.s for t in items], dtype=np.float64),
                   np.array([t.a for t in items], dtype=np.float64),
                   np.array([t.r for t in items], dtype=np.float64),
                   np.array([t.s_next for t in items], dtype=np.float64),
                   np.array([t.done for t in items], dtype=np.float64))


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.size = 0
        self.cursor = 0
        self._s = np.zeros((self.capacity, obs_dim))
        self._a = np.zeros((self.capacity, act_dim))
        self._r = np.zeros(self.capacity)
        self._s_next = np.zeros((self.capacity, obs_dim))
        self._done = np.zeros(self.capacity)

    def __len__(self):
        return self.size

    def push(self, t: Transition) -> None:
        s, a, s_next = (np.asarray(x, dtype=np.float64) for x in (t.s, t.a, t.s_next))
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(a)) and np.isfinite(t.r)
                and np.all(np.isfinite(s_next))):
            raise ValueError("refusing to store a non-finite transition")
        i = self.cursor
        self._s[i] = s
        self._a[i] = a
        self._r[i] = t.r
        self._s_next[i] = s_next
        self._done[i] = float(bool(t.done))
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise IndexError("cannot sample from an empty replay buffer")
        return rng.integers(0, self.size, size=n)

    def sample_batch(self, n: int, rng: np.random.Generator) -> Batch:
        idx = self._indices(n, rng)
        return Batch(self._s[idx], self._a[idx], self._r[idx], self._s_next[idx], self._done[idx])

    def sample(self, n: int, rng: np.random.Generator) -> list[Transition]:
        return [self[i] for i in self._indices(n, rng)]

    def __getitem__(self, i: int) -> Transition:
        if not 0 <= i < self.size:
            raise IndexError(i)
        return Transition(self._s[i].copy(), self._a[i].copy(), float(self._r[i]),
                          self._s_next[i].copy(), bool(self._done[i]))

    def contents(self) -> list[Transition]:
        """Stored transitions, oldest first."""
        start = self.cursor if self.size == self.capacity else 0
        return [self[(start + k) % self.capacity] for k in range(self.size)]
