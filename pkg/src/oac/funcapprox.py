"""Small feed-forward networks with hand-written backprop, Adam and Polyak averaging.

Everything runs in float64. Inputs may be a single vector ``(in,)`` or a batch
``(n, in)``; parameter gradients of a batch are summed over rows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MlpParams:
    """Ordered affine layers; ReLU between them, identity on the output.

    All weights and biases are views into one contiguous float64 vector, so
    optimizer and averaging updates act on the whole network at once.
    """

    def __init__(self, weights, biases):
        weights = [np.asarray(w, dtype=np.float64) for w in weights]
        biases = [np.asarray(b, dtype=np.float64) for b in biases]
        if len(weights) != len(biases) or not weights:
            raise ValueError("need one bias per weight matrix and at least one layer")
        for k, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError(f"layer {k}: weight {w.shape} and bias {b.shape} disagree")
            if k and w.shape[1] != weights[k - 1].shape[0]:
                raise ValueError(f"layer {k} input {w.shape[1]} != previous output {weights[k - 1].shape[0]}")
        self.shapes = [w.shape for w in weights]
        self.vector = np.empty(sum(w.size + b.size for w, b in zip(weights, biases)))
        self.weights, self.biases = self._views(self.vector)
        for dst, src in zip(self.arrays(), [a for pair in zip(weights, biases) for a in pair]):
            dst[...] = src

    def _views(self, vec):
        ws, bs, i = [], [], 0
        for out_dim, in_dim in self.shapes:
            ws.append(vec[i:i + out_dim * in_dim].reshape(out_dim, in_dim))
            i += out_dim * in_dim
            bs.append(vec[i:i + out_dim])
            i += out_dim
        return ws, bs

    @classmethod
    def from_vector(cls, shapes, vec) -> "MlpParams":
        new = cls.__new__(cls)
        new.shapes = [tuple(s) for s in shapes]
        new.vector = np.array(vec, dtype=np.float64)
        new.weights, new.biases = new._views(new.vector)
        if sum(o * i + o for o, i in new.shapes) != new.vector.size:
            raise ValueError("vector length does not match layer shapes")
        return new

    def __repr__(self):
        return f"MlpParams(shapes={self.shapes})"

    @property
    def in_dim(self) -> int:
        return self.shapes[0][1]

    @property
    def out_dim(self) -> int:
        return self.shapes[-1][0]

    @property
    def sizes(self) -> list[int]:
        return [self.in_dim] + [o for o, _ in self.shapes]

    def arrays(self) -> list[np.ndarray]:
        """Parameter arrays in a fixed order (w0, b0, w1, b1, ...)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "MlpParams":
        return MlpParams.from_vector(self.shapes, self.vector)

    def zeros_like(self) -> "MlpParams":
        return MlpParams.from_vector(self.shapes, np.zeros_like(self.vector))

    def flat(self) -> np.ndarray:
        return self.vector.copy()

    def set_flat(self, vec) -> None:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != self.vector.shape:
            raise ValueError(f"flat vector has {vec.size} entries, parameters need {self.vector.size}")
        self.vector[...] = vec

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.vector).all())


@dataclass
class GradBundle:
    params: MlpParams
    input: np.ndarray


def init_mlp(sizes, rng: np.random.Generator) -> MlpParams:
    """Layer sizes ``[in, h1, ..., out]``; entries uniform in +-1/sqrt(fan_in)."""
    sizes = [int(s) for s in sizes]
    if len(sizes) < 2 or min(sizes) < 1:
        raise ValueError(f"bad layer sizes {sizes}")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpParams(weights, biases)


def _as_input(params: MlpParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != params.in_dim:
        raise ValueError(f"input shape {x.shape} does not match network input {params.in_dim}")
    return x


def _forward_trace(params: MlpParams, x: np.ndarray) -> list[np.ndarray]:
    # activations[k] is the input to layer k; the last entry is the output
    acts = [x]
    h = x
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w.T
        h += b
        if k < last:
            np.maximum(h, 0.0, out=h)
        acts.append(h)
    return acts


def mlp_forward(params: MlpParams, x) -> np.ndarray:
    return _forward_trace(params, _as_input(params, x))[-1]


def _backward(params: MlpParams, acts: list[np.ndarray], upstream: np.ndarray) -> GradBundle:
    batched = acts[0].ndim == 2
    if not batched:
        acts = [a[None, :] for a in acts]
        upstream = upstream[None, :]
    grads = MlpParams.from_vector(params.shapes, np.empty_like(params.vector))
    delta = upstream
    for k in range(len(params.shapes) - 1, -1, -1):
        np.matmul(delta.T, acts[k], out=grads.weights[k])
        np.sum(delta, axis=0, out=grads.biases[k])
        delta = delta @ params.weights[k]
        if k > 0:
            delta = delta * (acts[k] > 0.0)
    return GradBundle(grads, delta if batched else delta[0])


def mlp_backward(params: MlpParams, x, upstream) -> GradBundle:
    """Gradients of ``sum(upstream * mlp_forward(params, x))``."""
    return mlp_value_and_grad(params, x, lambda out: upstream)[1]


def mlp_value_and_grad(params: MlpParams, x, upstream_fn):
    """Forward pass, then backward with ``upstream_fn(output)``; one shared trace."""
    x = _as_input(params, x)
    acts = _forward_trace(params, x)
    out = acts[-1]
    upstream = np.asarray(upstream_fn(out), dtype=np.float64)
    if upstream.shape != out.shape:
        raise ValueError(f"upstream shape {upstream.shape} does not match output {out.shape}")
    return out, _backward(params, acts, upstream)


@dataclass
class AdamState:
    """Moment accumulators laid out like ``MlpParams.vector``."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: MlpParams) -> "AdamState":
        return cls(np.zeros_like(params.vector), np.zeros_like(params.vector))

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.t, self.beta1, self.beta2, self.eps)


def adam_step(state: AdamState, params: MlpParams, grads: MlpParams, lr: float):
    """One bias-corrected Adam descent step, in place. Pass negated grads to ascend."""
    if not lr > 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    g = grads.vector
    if g.shape != params.vector.shape or state.m.shape != g.shape:
        raise ValueError("gradient / optimizer state shapes do not match parameters")
    if not np.isfinite(g).all():
        raise FloatingPointError("non-finite gradient passed to adam_step")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    m, v = state.m, state.v
    m *= b1
    m += (1.0 - b1) * g
    v *= b2
    v += (1.0 - b2) * (g * g)
    step = lr / (1.0 - b1 ** state.t)
    params.vector -= step * m / (np.sqrt(v / (1.0 - b2 ** state.t)) + state.eps)
    return params, state


def polyak_update(target: MlpParams, online: MlpParams, tau: float) -> MlpParams:
    """target <- tau * online + (1 - tau) * target, in place."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    if target.shapes != online.shapes:
        raise ValueError("target and online networks have different shapes")
    if tau == 1.0:
        target.vector[...] = online.vector
    elif tau != 0.0:
        target.vector *= 1.0 - tau
        target.vector += tau * online.vector
    return target
