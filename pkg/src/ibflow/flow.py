"""RealNVP coupling flow between the encoder's Gaussian space and the
tilted prior space: exact log-Jacobian, algebraic inverse, and manual
backprop so the flow can be trained jointly with the encoder/decoder.

Each coupling layer holds one of the two latent channels fixed and maps the
other affinely, z = u * exp(S(fixed)) + t(fixed); alternating the fixed
channel across layers makes the overall Jacobian triangular with
log-determinant sum(S). Scale outputs are soft-clamped to [-clamp, clamp]
with a scaled tanh so exp() stays bounded during early joint training.
"""

import numpy as np

from .nets import DenseNet

__all__ = ["CouplingLayer", "Flow", "latent_log_likelihood"]


class CouplingLayer:
    """One affine coupling step; ``parity`` picks the channel held fixed."""

    def __init__(self, parity, rng, hidden=16, clamp=5.0):
        self.parity = int(parity)
        self.clamp = float(clamp)
        self.scale_net = DenseNet([1, hidden, hidden, 1], rng,
                                  hidden_activation="tanh", zero_last=True)
        self.shift_net = DenseNet([1, hidden, hidden, 1], rng,
                                  hidden_activation="tanh", zero_last=True)
        self._cache = None

    def params(self):
        return self.scale_net.params() + self.shift_net.params()

    def _nets(self, x_fix, record=False):
        s_raw = self.scale_net.forward(x_fix[:, None], record=record)[:, 0]
        s = self.clamp * np.tanh(s_raw / self.clamp)
        t = self.shift_net.forward(x_fix[:, None], record=record)[:, 0]
        if not np.all(np.isfinite(s)):
            raise FloatingPointError(
                f"non-finite scale output in coupling layer (parity "
                f"{self.parity})")
        return s, t

    def forward(self, u, record=False):
        """u (batch, 2) -> (z, per-sample log|det|)."""
        fix, upd = self.parity, 1 - self.parity
        x_fix = u[:, fix]
        x_upd = u[:, upd]
        s, t = self._nets(x_fix, record=record)
        es = np.exp(s)
        z = np.empty_like(u)
        z[:, fix] = x_fix
        z[:, upd] = x_upd * es + t
        if record:
            self._cache = (x_upd, s, es)
        return z, s.copy()

    def inverse(self, z):
        """Exact inverse; returns (u, per-sample log|det| of the inverse)."""
        fix, upd = self.parity, 1 - self.parity
        s, t = self._nets(z[:, fix])
        u = np.empty_like(z)
        u[:, fix] = z[:, fix]
        u[:, upd] = (z[:, upd] - t) * np.exp(-s)
        return u, -s

    def backward(self, g_z, g_logdet):
        """Backprop through a recorded forward pass.

        g_z is the loss gradient at the output point, g_logdet the gradient
        w.r.t. this layer's log-det contribution (per sample). Returns
        (g_u, grads) with grads ordered like params().
        """
        if self._cache is None:
            raise RuntimeError("backward() without recorded forward")
        x_upd, s, es = self._cache
        self._cache = None
        fix, upd = self.parity, 1 - self.parity
        ds = g_z[:, upd] * x_upd * es + g_logdet
        dt = g_z[:, upd]
        ds_raw = ds * (1.0 - (s / self.clamp) ** 2)
        dfix_s, grads_s = self.scale_net.backward(ds_raw[:, None])
        dfix_t, grads_t = self.shift_net.backward(dt[:, None])
        g_u = np.empty_like(g_z)
        g_u[:, upd] = g_z[:, upd] * es
        g_u[:, fix] = g_z[:, fix] + dfix_s[:, 0] + dfix_t[:, 0]
        return g_u, grads_s + grads_t


class Flow:
    """Stack of coupling layers with alternating parity."""

    def __init__(self, layers):
        for i, layer in enumerate(layers[1:], start=1):
            if layer.parity == layers[i - 1].parity:
                raise ValueError("coupling-layer parity must alternate")
        self.layers = list(layers)

    @classmethod
    def build(cls, n_layers, rng, hidden=16, clamp=5.0):
        return cls([CouplingLayer(k % 2, rng, hidden=hidden, clamp=clamp)
                    for k in range(n_layers)])

    @property
    def n_layers(self):
        return len(self.layers)

    def params(self):
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def forward(self, u, record=False):
        """Map encoder-space points to prior space: (z, log|det dF/du|)."""
        u = np.asarray(u, dtype=np.float64)
        single = u.ndim == 1
        z = np.atleast_2d(u)
        logdet = np.zeros(z.shape[0])
        for layer in self.layers:
            z, s = layer.forward(z, record=record)
            logdet += s
        if single:
            return z[0], float(logdet[0])
        return z, logdet

    def inverse(self, z):
        """Map prior-space points back; returns (u, log|det dF^-1/dz|)."""
        z = np.asarray(z, dtype=np.float64)
        single = z.ndim == 1
        u = np.atleast_2d(z)
        logdet = np.zeros(u.shape[0])
        for layer in reversed(self.layers):
            u, s = layer.inverse(u)
            logdet += s
        if single:
            return u[0], float(logdet[0])
        return u, logdet

    def backward(self, g_z, g_logdet):
        """Backprop through a recorded forward stack; returns (g_u, grads)."""
        grads_per_layer = []
        g = np.atleast_2d(g_z)
        gld = np.asarray(g_logdet, dtype=np.float64)
        if gld.ndim == 0:
            gld = np.full(g.shape[0], float(gld))
        for layer in reversed(self.layers):
            g, grads = layer.backward(g, gld)
            grads_per_layer.append(grads)
        flat = []
        for grads in reversed(grads_per_layer):
            flat.extend(grads)
        return g, flat


def latent_log_likelihood(flow, prior, z, temperature=None):
    """Exact log-likelihood of latent (encoder-space) points.

    Change of variables with the declared orientation: likelihood of a
    latent point is the prior log-density at its forward flow image plus the
    forward log-det.
    """
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    fz, logdet = flow.forward(np.atleast_2d(z))
    out = prior.log_density(fz, temperature=temperature) + logdet
    return float(out[0]) if single else out
