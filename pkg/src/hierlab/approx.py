"""Small dense networks in plain numpy with hand-written reverse-mode gradients.

A network is a flat float64 parameter vector plus shape metadata; optimizer
state is a pair of moment vectors. Hidden layers use tanh. The output layer
is either left linear (critics) or squashed through a scaled tanh (actors),
so actor outputs always land inside the action box.

Multi-head networks share a trunk made of every hidden layer and keep one
output layer per head. Parameters exclusive to head i are untouched by a
gradient taken through head j.

All arithmetic is float64 on purpose: it keeps the finite-difference checks
on the backward pass tight.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEFAULT_HIDDEN = (300, 300)

_SNAPSHOT_MAGIC = b"HLPS"
_SNAPSHOT_VERSION = 1


@dataclass
class Network:
    """MLP with a shared trunk and ``head_count`` output layers."""

    layer_sizes: tuple[int, ...]
    head_count: int
    output_squash: str  # "identity" or "tanh"
    output_scale: np.ndarray  # (head_count, out_dim), applied after tanh
    params: np.ndarray

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]


def _trunk_shapes(layer_sizes) -> list[tuple[int, int]]:
    # every mapping except the last one; the last mapping is per-head
    return [(layer_sizes[i + 1], layer_sizes[i]) for i in range(len(layer_sizes) - 2)]


def _head_shape(layer_sizes) -> tuple[int, int]:
    return (layer_sizes[-1], layer_sizes[-2])


def param_count(layer_sizes, head_count: int = 1) -> int:
    n = sum((fi + 1) * fo for fo, fi in _trunk_shapes(layer_sizes))
    fo, fi = _head_shape(layer_sizes)
    return n + head_count * (fi + 1) * fo


@lru_cache(maxsize=None)
def _slices(layer_sizes, head_count):
    """Flat-vector layout: trunk (W, b per layer), then each head (W, b)."""
    out = []
    off = 0
    for fo, fi in _trunk_shapes(layer_sizes):
        out.append((slice(off, off + fo * fi), slice(off + fo * fi, off + fo * fi + fo), (fo, fi)))
        off += (fi + 1) * fo
    heads = []
    fo, fi = _head_shape(layer_sizes)
    for _ in range(head_count):
        heads.append((slice(off, off + fo * fi), slice(off + fo * fi, off + fo * fi + fo), (fo, fi)))
        off += (fi + 1) * fo
    return out, heads, off


def build_network(layer_sizes, head_count=1, output_squash="identity", output_scale=1.0, rng=None) -> Network:
    """Build a network with per-layer uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init.

    Deterministic given ``rng``; the draw order is fixed (trunk layers in
    order, then heads in order, weights before biases).
    """
    layer_sizes = tuple(int(s) for s in layer_sizes)
    if len(layer_sizes) < 2:
        raise ValueError("layer_sizes needs at least input and output entries")
    if any(s <= 0 for s in layer_sizes):
        raise ValueError(f"layer sizes must be positive, got {layer_sizes}")
    if head_count < 1:
        raise ValueError(f"head_count must be >= 1, got {head_count}")
    if output_squash not in ("identity", "tanh"):
        raise ValueError(f"unknown output squash {output_squash!r}")
    if rng is None:
        raise ValueError("an rng is required for initialization")

    trunk, heads, total = _slices(layer_sizes, head_count)
    params = np.empty(total, dtype=np.float64)
    for wsl, bsl, (fo, fi) in trunk + heads:
        bound = 1.0 / np.sqrt(fi)
        params[wsl] = rng.uniform(-bound, bound, fo * fi)
        params[bsl] = rng.uniform(-bound, bound, fo)

    scale = np.broadcast_to(
        np.asarray(output_scale, dtype=np.float64), (head_count, layer_sizes[-1])
    ).copy()
    return Network(layer_sizes, head_count, output_squash, scale, params)


def _check_head(net: Network, head_index: int) -> None:
    if not 0 <= head_index < net.head_count:
        raise ValueError(f"head index {head_index} out of range for {net.head_count} heads")


def _as_batch(net: Network, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise ValueError(f"input has shape {x.shape}, expected (*, {net.in_dim})")
    return x, single


def _forward_cache(net: Network, x: np.ndarray, head_index: int):
    trunk, heads, _ = _slices(net.layer_sizes, net.head_count)
    p = net.params
    acts = [x]  # acts[i] feeds mapping i
    h = x
    for wsl, bsl, (fo, fi) in trunk:
        h = np.tanh(h @ p[wsl].reshape(fo, fi).T + p[bsl])
        acts.append(h)
    wsl, bsl, (fo, fi) = heads[head_index]
    raw = h @ p[wsl].reshape(fo, fi).T + p[bsl]
    if net.output_squash == "tanh":
        y = net.output_scale[head_index] * np.tanh(raw)
    else:
        y = raw
    return acts, raw, y


def forward(net: Network, x, head_index: int = 0) -> np.ndarray:
    """Evaluate the network on one input vector or a batch (rows)."""
    _check_head(net, head_index)
    xb, single = _as_batch(net, x)
    _, _, y = _forward_cache(net, xb, head_index)
    return y[0] if single else y


def gradient_with_input(net: Network, x, upstream, head_index: int = 0):
    """Reverse-mode pass: returns (d(upstream . y)/dparams, d(upstream . y)/dx).

    For batched inputs the parameter gradient is summed over the batch and
    the input gradient is returned row per row.
    """
    _check_head(net, head_index)
    xb, single = _as_batch(net, x)
    up = np.asarray(upstream, dtype=np.float64)
    if single:
        up = up[None, :]
    if up.shape != (xb.shape[0], net.out_dim):
        raise ValueError(f"upstream has shape {up.shape}, expected {(xb.shape[0], net.out_dim)}")

    trunk, heads, total = _slices(net.layer_sizes, net.head_count)
    p = net.params
    acts, raw, _ = _forward_cache(net, xb, head_index)

    grads = np.zeros(total, dtype=np.float64)
    if net.output_squash == "tanh":
        d = up * net.output_scale[head_index] * (1.0 - np.tanh(raw) ** 2)
    else:
        d = up

    wsl, bsl, (fo, fi) = heads[head_index]
    grads[wsl] = (d.T @ acts[-1]).ravel()
    grads[bsl] = d.sum(axis=0)
    d = d @ p[wsl].reshape(fo, fi)

    for (wsl, bsl, (fo, fi)), a_in, a_out in zip(reversed(trunk), reversed(acts[:-1]), reversed(acts[1:])):
        d = d * (1.0 - a_out**2)  # through tanh
        grads[wsl] = (d.T @ a_in).ravel()
        grads[bsl] = d.sum(axis=0)
        d = d @ p[wsl].reshape(fo, fi)

    return grads, (d[0] if single else d)


def gradient(net: Network, x, upstream, head_index: int = 0) -> np.ndarray:
    """Parameter gradient of ``upstream . output`` (summed over a batch)."""
    return gradient_with_input(net, x, upstream, head_index)[0]


def input_gradient(net: Network, x, upstream, head_index: int = 0) -> np.ndarray:
    """Gradient of ``upstream . output`` with respect to the input."""
    return gradient_with_input(net, x, upstream, head_index)[1]


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_adam(n_params: int, learning_rate: float = 3e-4, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    return AdamState(
        first_moment=np.zeros(n_params, dtype=np.float64),
        second_moment=np.zeros(n_params, dtype=np.float64),
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_step(adam: AdamState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """One Adam update with bias correction; mutates ``adam``, returns new params."""
    if params.shape != grads.shape or params.shape != adam.first_moment.shape:
        raise ValueError("params, grads and moment vectors must have equal length")
    adam.step_count += 1
    adam.first_moment *= adam.beta1
    adam.first_moment += (1.0 - adam.beta1) * grads
    adam.second_moment *= adam.beta2
    adam.second_moment += (1.0 - adam.beta2) * grads**2
    m_hat = adam.first_moment / (1.0 - adam.beta1**adam.step_count)
    v_hat = adam.second_moment / (1.0 - adam.beta2**adam.step_count)
    return params - adam.learning_rate * m_hat / (np.sqrt(v_hat) + adam.epsilon)


def polyak_update(target_params: np.ndarray, online_params: np.ndarray, tau: float) -> np.ndarray:
    """target <- tau * online + (1 - tau) * target, elementwise."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    if target_params.shape != online_params.shape:
        raise ValueError("target and online parameter vectors must have equal length")
    return tau * online_params + (1.0 - tau) * target_params


def clone_network(net: Network) -> Network:
    return Network(net.layer_sizes, net.head_count, net.output_squash,
                   net.output_scale.copy(), net.params.copy())


def save_params(path, params: np.ndarray) -> None:
    """Write a flat little-endian float64 snapshot with a 16-byte header."""
    params = np.ascontiguousarray(params, dtype=np.float64)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIQ", _SNAPSHOT_MAGIC, _SNAPSHOT_VERSION, params.size))
        fh.write(params.astype("<f8").tobytes())


def load_params(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16:
            raise ValueError(f"{path}: truncated snapshot header")
        magic, version, count = struct.unpack("<4sIQ", header)
        if magic != _SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not a parameter snapshot (magic {magic!r})")
        if version != _SNAPSHOT_VERSION:
            raise ValueError(f"{path}: unsupported snapshot version {version}")
        data = fh.read(8 * count)
        if len(data) != 8 * count:
            raise ValueError(f"{path}: snapshot shorter than header promises")
        return np.frombuffer(data, dtype="<f8").astype(np.float64)
