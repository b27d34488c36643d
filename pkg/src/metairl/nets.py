"""From-scratch feed-forward networks and the ADAM optimizer.

Everything here works on plain float64 numpy arrays. Networks are small
(two hidden layers of 64 units by default) and parameters are exposed as a
single flat vector so the meta-learning and trust-region code can treat
them as points in R^n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("tanh", "relu", "identity")


class ShapeError(ValueError):
    """Input or gradient shape inconsistent with the network."""


def _act(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "identity":
        return z
    raise ValueError(f"unknown activation {kind!r}")


def _act_grad(kind: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Derivative of the activation at pre-activation z (a = act(z))."""
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    if kind == "identity":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {kind!r}")


@dataclass
class DenseNet:
    """A fully connected network: weights[i] has shape (in_i, out_i).

    ``activations[i]`` is applied after layer i; the last entry must be
    "identity" so the network emits raw logits / scalars.
    """

    sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: tuple[str, ...]

    def __post_init__(self):
        if len(self.sizes) < 2:
            raise ShapeError("need at least input and output sizes")
        n_layers = len(self.sizes) - 1
        if not (len(self.weights) == len(self.biases) == len(self.activations) == n_layers):
            raise ShapeError("layer count mismatch")
        for i in range(n_layers):
            if self.weights[i].shape != (self.sizes[i], self.sizes[i + 1]):
                raise ShapeError(f"weight {i} has shape {self.weights[i].shape}, "
                                 f"expected {(self.sizes[i], self.sizes[i + 1])}")
            if self.biases[i].shape != (self.sizes[i + 1],):
                raise ShapeError(f"bias {i} has shape {self.biases[i].shape}")
        for kind in self.activations:
            if kind not in ACTIVATIONS:
                raise ValueError(f"unknown activation {kind!r}")
        if self.activations[-1] != "identity":
            raise ValueError("output layer must use the identity activation")

    @property
    def input_dim(self) -> int:
        return self.sizes[0]

    @property
    def output_dim(self) -> int:
        return self.sizes[-1]

    @property
    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "DenseNet":
        return DenseNet(self.sizes, [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], self.activations)

    def get_flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def set_flat(self, flat: np.ndarray) -> None:
        if flat.shape != (self.num_params,):
            raise ShapeError(f"flat vector has shape {flat.shape}, expected ({self.num_params},)")
        if not np.all(np.isfinite(flat)):
            raise ValueError("non-finite values in parameter vector")
        off = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = flat[off:off + w.size].reshape(w.shape).copy()
            off += w.size
            self.biases[i] = flat[off:off + b.size].copy()
            off += b.size

    def with_flat(self, flat: np.ndarray) -> "DenseNet":
        out = self.copy()
        out.set_flat(flat)
        return out


def init_dense_net(sizes: tuple[int, ...] | list[int], seed: int,
                   hidden_activation: str = "tanh") -> DenseNet:
    """Scaled uniform fan-in init: W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), b = 0."""
    rng = np.random.default_rng(seed)
    sizes = tuple(int(s) for s in sizes)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    acts = tuple([hidden_activation] * (len(sizes) - 2) + ["identity"])
    return DenseNet(sizes, weights, biases, acts)


def zero_dense_net(sizes: tuple[int, ...] | list[int],
                   hidden_activation: str = "tanh") -> DenseNet:
    sizes = tuple(int(s) for s in sizes)
    weights = [np.zeros((i, o)) for i, o in zip(sizes[:-1], sizes[1:])]
    biases = [np.zeros(o) for o in sizes[1:]]
    acts = tuple([hidden_activation] * (len(sizes) - 2) + ["identity"])
    return DenseNet(sizes, weights, biases, acts)


def _as_batch(net: DenseNet, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ShapeError(f"input has shape {x.shape}, expected (*, {net.input_dim})")
    return x, single


def forward(net: DenseNet, x: np.ndarray) -> np.ndarray:
    """Forward pass. Accepts a single vector or a (batch, in) matrix."""
    xb, single = _as_batch(net, x)
    h = xb
    for w, b, kind in zip(net.weights, net.biases, net.activations):
        h = _act(kind, h @ w + b)
    return h[0] if single else h


def _forward_cache(net: DenseNet, xb: np.ndarray):
    """Returns (pre-activations z_i, post-activations a_i) per layer; a_-1 = input."""
    zs, acts = [], [xb]
    h = xb
    for w, b, kind in zip(net.weights, net.biases, net.activations):
        z = h @ w + b
        h = _act(kind, z)
        zs.append(z)
        acts.append(h)
    return zs, acts


def backward(net: DenseNet, x: np.ndarray, out_grad: np.ndarray) -> np.ndarray:
    """Gradient of sum_batch <out_grad, output> w.r.t. the flat parameters.

    ``out_grad`` must match the forward output shape for ``x``. The result is
    summed over batch rows; divide by the batch size for a mean objective.
    """
    xb, single = _as_batch(net, x)
    g = np.asarray(out_grad, dtype=np.float64)
    if single:
        g = g[None, :]
    if g.shape != (xb.shape[0], net.output_dim):
        raise ShapeError(f"output gradient has shape {g.shape}, "
                         f"expected {(xb.shape[0], net.output_dim)}")
    zs, acts = _forward_cache(net, xb)

    flat = np.empty(net.num_params)
    offsets = []
    off = 0
    for w, b in zip(net.weights, net.biases):
        offsets.append(off)
        off += w.size + b.size

    delta = g
    for i in range(len(net.weights) - 1, -1, -1):
        delta = delta * _act_grad(net.activations[i], zs[i], acts[i + 1])
        dw = acts[i].T @ delta
        db = delta.sum(axis=0)
        o = offsets[i]
        flat[o:o + dw.size] = dw.ravel()
        flat[o + dw.size:o + dw.size + db.size] = db
        if i > 0:
            delta = delta @ net.weights[i].T
    return flat


def jvp(net: DenseNet, x: np.ndarray, tangent: np.ndarray) -> np.ndarray:
    """Directional derivative of the outputs along a flat parameter tangent.

    Forward-mode pass: returns d output / d eps at eps=0 for parameters
    theta + eps * tangent. Shape matches forward(net, x).
    """
    if tangent.shape != (net.num_params,):
        raise ShapeError("tangent length does not match parameter count")
    xb, single = _as_batch(net, x)
    zs, acts = _forward_cache(net, xb)

    off = 0
    dh = np.zeros_like(xb)
    for i, (w, b, kind) in enumerate(zip(net.weights, net.biases, net.activations)):
        dw = tangent[off:off + w.size].reshape(w.shape)
        off += w.size
        db = tangent[off:off + b.size]
        off += b.size
        dz = acts[i] @ dw + dh @ w + db
        dh = dz * _act_grad(kind, zs[i], acts[i + 1])
    return dh[0] if single else dh


@dataclass
class AdamState:
    """ADAM moment accumulators for one flat parameter vector."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, num_params: int, lr: float = 1e-3, beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(m=np.zeros(num_params), v=np.zeros(num_params),
                   step=0, lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.step,
                         self.lr, self.beta1, self.beta2, self.eps)


def adam_step(params: np.ndarray, grad: np.ndarray, state: AdamState) -> tuple[np.ndarray, AdamState]:
    """One ADAM update on a flat parameter vector. Returns (new params, new state).

    The incoming state is not mutated. Rejects non-finite gradients.
    """
    if grad.shape != params.shape or state.m.shape != params.shape:
        raise ShapeError("parameter/gradient/state shapes disagree")
    if not np.all(np.isfinite(grad)):
        raise ValueError("non-finite gradient passed to adam_step")
    new = state.copy()
    new.step = state.step + 1
    new.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    new.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = new.m / (1.0 - state.beta1 ** new.step)
    v_hat = new.v / (1.0 - state.beta2 ** new.step)
    out = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite parameters after adam_step")
    return out, new


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))
