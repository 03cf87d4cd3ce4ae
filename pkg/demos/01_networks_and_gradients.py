#!/usr/bin/env python3
"""Tour of the function-approximation core: build a small MLP, check its
hand-written reverse-mode gradients against finite differences, then fit a
toy regression with Adam and track targets with polyak averaging."""

import numpy as np

from hierlab import approx
from hierlab.rngs import substream

rng = substream(0, "demo-nets")

# a 2-hidden-layer net, 3 inputs -> 2 outputs, linear output layer
net = approx.build_network([3, 32, 32, 2], rng=rng)
print(f"parameters: {net.params.size}")

x = rng.normal(size=3)
print("forward(x) =", approx.forward(net, x))

# gradient of upstream . output, checked against central differences
upstream = np.array([1.0, -0.5])
grad = approx.gradient(net, x, upstream)
h = 1e-5
fd = np.empty_like(grad)
base = net.params.copy()
for i in range(base.size):
    net.params = base.copy()
    net.params[i] += h
    hi = float(upstream @ approx.forward(net, x))
    net.params[i] -= 2 * h
    lo = float(upstream @ approx.forward(net, x))
    fd[i] = (hi - lo) / (2 * h)
net.params = base
rel = np.max(np.abs(grad - fd)) / max(1.0, np.max(np.abs(fd)))
print(f"finite-difference agreement: max relative error {rel:.2e}")

# fit y = sin(x0) + 0.5*cos(x1) by gradient descent on squared error
target_fn = lambda X: np.sin(X[:, 0]) + 0.5 * np.cos(X[:, 1])
fit = approx.build_network([2, 32, 1], rng=rng)
adam = approx.init_adam(fit.params.size, learning_rate=1e-2)
X = rng.uniform(-2, 2, size=(256, 2))
y = target_fn(X)
for step in range(400):
    pred = approx.forward(fit, X)[:, 0]
    err = pred - y
    grads = approx.gradient(fit, X, (2.0 / len(X)) * err[:, None])
    fit.params = approx.adam_step(adam, fit.params, grads)
    if step % 100 == 0:
        print(f"step {step:4d}  mse {np.mean(err ** 2):.5f}")

# polyak-averaged target copy trails the online parameters
target = approx.clone_network(fit)
target.params += rng.normal(0, 0.5, target.params.shape)  # knock it away first
gap0 = np.linalg.norm(target.params - fit.params)
for _ in range(100):
    target.params = approx.polyak_update(target.params, fit.params, 0.05)
print(f"target gap before/after tracking: {gap0:.3f} -> "
      f"{np.linalg.norm(target.params - fit.params):.5f}")

# multi-head: one trunk, three output heads; head gradients stay separate
multi = approx.build_network([4, 16, 2], head_count=3, output_squash="tanh", rng=rng)
print("head outputs:", [np.round(approx.forward(multi, np.ones(4), h), 3) for h in range(3)])
