"""Dense networks with hand-rolled reverse-mode gradients, plus Adam.

Small fully-connected stacks are all this package needs (2D latent space,
shallow encoders/decoders, tiny flow subnets), so the machinery stays
deliberately minimal: float64 numpy, explicit caches, analytic layer
backprop. Every gradient path is validated against central finite
differences in the test suite.
"""

import math

import numpy as np

__all__ = ["DenseNet", "Adam", "NonFiniteGradientError"]


class NonFiniteGradientError(FloatingPointError):
    """A gradient or updated parameter stopped being finite."""


def _act(tag, z):
    if tag == "identity":
        return z
    if tag == "relu":
        return np.maximum(z, 0.0)
    if tag == "tanh":
        return np.tanh(z)
    raise ValueError(f"unknown activation {tag!r}")


def _act_grad(tag, z, a):
    """Derivative of the activation given pre-activation z and output a."""
    if tag == "identity":
        return np.ones_like(z)
    if tag == "relu":
        return (z > 0.0).astype(np.float64)
    if tag == "tanh":
        return 1.0 - a * a
    raise ValueError(f"unknown activation {tag!r}")


class DenseNet:
    """Fully-connected stack; layer i maps dims[i] -> dims[i+1].

    Parameters
    ----------
    dims : sequence of int
        Layer widths, input first.
    hidden_activation : str
        Applied to every layer except the last.
    output_activation : str
        Applied to the last layer (default linear).
    rng : numpy Generator
        Source for the fan-in-scaled uniform weight init.
    zero_last : bool
        Zero the final layer's weights and bias (identity-start flows).
    """

    def __init__(self, dims, rng, hidden_activation="relu",
                 output_activation="identity", zero_last=False):
        if len(dims) < 2:
            raise ValueError("need at least one layer")
        self.dims = tuple(int(d) for d in dims)
        self.activations = [hidden_activation] * (len(dims) - 2) + [output_activation]
        self.weights = []
        self.biases = []
        for i in range(len(dims) - 1):
            fan_in = dims[i]
            bound = 1.0 / math.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(dims[i + 1], dims[i]))
            self.weights.append(np.asarray(w, dtype=np.float64))
            self.biases.append(np.zeros(dims[i + 1]))
        if zero_last:
            self.weights[-1][:] = 0.0
            self.biases[-1][:] = 0.0
        self._cache = None

    @property
    def input_dim(self):
        return self.dims[0]

    @property
    def output_dim(self):
        return self.dims[-1]

    def params(self):
        """Parameter arrays in a fixed order (W0, b0, W1, b1, ...)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def forward(self, x, record=False):
        """Evaluate the stack; x is (input_dim,) or (batch, input_dim)."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        a = np.atleast_2d(x)
        if a.shape[1] != self.input_dim:
            raise ValueError(
                f"input dim {a.shape[1]} != expected {self.input_dim}")
        inputs = []
        preacts = []
        outputs = []
        for w, b, tag in zip(self.weights, self.biases, self.activations):
            inputs.append(a)
            z = a @ w.T + b
            a = _act(tag, z)
            preacts.append(z)
            outputs.append(a)
        if record:
            self._cache = (inputs, preacts, outputs, single)
        return a[0] if single else a

    def backward(self, upstream):
        """Backprop a recorded forward pass.

        Returns (input_gradient, grads) with grads ordered like params().
        The cache is consumed; call forward(record=True) first.
        """
        if self._cache is None:
            raise RuntimeError("backward() without a recorded forward pass")
        inputs, preacts, outputs, single = self._cache
        self._cache = None
        g = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
        grad_w = [None] * len(self.weights)
        grad_b = [None] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            gz = g * _act_grad(self.activations[i], preacts[i], outputs[i])
            grad_w[i] = gz.T @ inputs[i]
            grad_b[i] = gz.sum(axis=0)
            g = gz @ self.weights[i]
        grads = []
        for gw, gb in zip(grad_w, grad_b):
            grads.append(gw)
            grads.append(gb)
        return (g[0] if single else g), grads


class Adam:
    """Adaptive-moment optimizer over a flat list of parameter arrays.

    Updates parameters in place; rejects non-finite gradients with a
    per-array diagnostic instead of corrupting the model.
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]

    def step(self, grads):
        if len(grads) != len(self.params):
            raise ValueError(f"{len(grads)} grads for {len(self.params)} params")
        for i, g in enumerate(grads):
            if g.shape != self.params[i].shape:
                raise ValueError(
                    f"grad {i} shape {g.shape} != param {self.params[i].shape}")
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradientError(
                    f"non-finite gradient in array {i} "
                    f"(shape {g.shape}, |finite max| "
                    f"{np.nanmax(np.abs(g[np.isfinite(g)])) if np.isfinite(g).any() else 'n/a'})")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if not np.all(np.isfinite(p)):
                raise NonFiniteGradientError("parameter became non-finite")
