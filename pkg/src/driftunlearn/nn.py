"""Minimal dense-network core: forward, exact reverse-mode gradients,
an Adam optimizer, and a finite-difference oracle for testing.

Networks are plain value objects over numpy arrays. The forward pass
returns an explicit cache (no global tape); backward consumes it and
yields gradients with respect to every parameter AND the input, which
is what lets a frozen autoencoder push gradients into an upstream map.

Inputs may be single vectors of shape (d,) or batches of shape (n, d);
parameter gradients are summed over the batch.
"""

import hashlib

import numpy as np

from .exceptions import ShapeError, TrainingDivergedError

ACTIVATIONS = ("identity", "tanh", "relu")


def _activate(z, kind):
    if kind == "identity":
        return z
    if kind == "tanh":
        return np.tanh(z)
    if kind == "relu":
        return np.maximum(z, 0.0)
    raise ValueError(f"unknown activation {kind!r}")


def _activate_grad(z, kind):
    # derivative w.r.t. the pre-activation; relu'(0) taken as 0
    if kind == "identity":
        return np.ones_like(z)
    if kind == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    if kind == "relu":
        return (z > 0).astype(z.dtype)
    raise ValueError(f"unknown activation {kind!r}")


class DenseLayer:
    """Affine map plus activation: act(W x + b), W of shape (out, in)."""

    def __init__(self, weights, bias, activation="identity"):
        weights = np.asarray(weights, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if weights.ndim != 2:
            raise ShapeError(f"weights must be 2-D, got shape {weights.shape}")
        if bias.ndim != 1 or bias.shape[0] != weights.shape[0]:
            raise ShapeError(
                f"bias shape {bias.shape} does not match weight rows "
                f"{weights.shape[0]}"
            )
        if activation not in ACTIVATIONS:
            raise ValueError(
                f"activation must be one of {ACTIVATIONS}, got {activation!r}"
            )
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
            raise ValueError("layer parameters must be finite")
        self.weights = weights
        self.bias = bias
        self.activation = activation

    @property
    def in_dim(self):
        return self.weights.shape[1]

    @property
    def out_dim(self):
        return self.weights.shape[0]

    @classmethod
    def init_random(cls, in_dim, out_dim, activation, rng):
        # uniform scaled by 1/sqrt(in_dim), zero bias
        limit = 1.0 / np.sqrt(in_dim)
        weights = rng.uniform(-limit, limit, size=(out_dim, in_dim))
        return cls(weights, np.zeros(out_dim), activation)

    def copy(self):
        return DenseLayer(self.weights.copy(), self.bias.copy(), self.activation)


class ForwardCache:
    """Per-layer inputs and pre-activations retained for backward."""

    def __init__(self, layer_shapes, inputs, pre_activations, single):
        self.layer_shapes = layer_shapes
        self.inputs = inputs
        self.pre_activations = pre_activations
        self.single = single


class DenseNetwork:
    """Ordered stack of DenseLayers with strict dimension chaining."""

    def __init__(self, layers):
        layers = list(layers)
        if not layers:
            raise ShapeError("network needs at least one layer")
        for i in range(len(layers) - 1):
            if layers[i].out_dim != layers[i + 1].in_dim:
                raise ShapeError(
                    f"layer {i} outputs {layers[i].out_dim} features but "
                    f"layer {i + 1} expects {layers[i + 1].in_dim}"
                )
        self.layers = layers

    @property
    def input_dim(self):
        return self.layers[0].in_dim

    @property
    def output_dim(self):
        return self.layers[-1].out_dim

    @classmethod
    def init_random(cls, dims, activations, rng):
        """Build a network from a dim chain [d0, d1, ..., dk] and one
        activation per layer."""
        if len(activations) != len(dims) - 1:
            raise ShapeError("need one activation per layer")
        layers = [
            DenseLayer.init_random(dims[i], dims[i + 1], activations[i], rng)
            for i in range(len(dims) - 1)
        ]
        return cls(layers)

    def parameters(self):
        """Flat list of parameter arrays: [W0, b0, W1, b1, ...]."""
        out = []
        for layer in self.layers:
            out.append(layer.weights)
            out.append(layer.bias)
        return out

    def set_parameters(self, params):
        if len(params) != 2 * len(self.layers):
            raise ShapeError("parameter count does not match network")
        for i, layer in enumerate(self.layers):
            w, b = params[2 * i], params[2 * i + 1]
            if w.shape != layer.weights.shape or b.shape != layer.bias.shape:
                raise ShapeError(f"parameter shapes do not match layer {i}")
            layer.weights = w.copy()
            layer.bias = b.copy()

    def copy(self):
        return DenseNetwork([layer.copy() for layer in self.layers])

    def forward(self, x):
        """Evaluate the network.

        Returns (y, cache); y has the same leading shape as x.
        """
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        h = x.reshape(1, -1) if single else x
        if h.ndim != 2:
            raise ShapeError(f"input must be 1-D or 2-D, got shape {x.shape}")
        if h.shape[1] != self.input_dim:
            raise ShapeError(
                f"input has {h.shape[1]} features, expected {self.input_dim}"
            )
        inputs = []
        pre_acts = []
        for layer in self.layers:
            inputs.append(h)
            z = h @ layer.weights.T + layer.bias
            pre_acts.append(z)
            h = _activate(z, layer.activation)
        shapes = [(l.weights.shape, l.bias.shape) for l in self.layers]
        cache = ForwardCache(shapes, inputs, pre_acts, single)
        y = h[0] if single else h
        return y, cache

    def backward(self, cache, grad_out):
        """Reverse-mode pass.

        grad_out is dLoss/dy with the same shape forward returned.
        Returns (param_grads, grad_in) where param_grads matches
        parameters() and grad_in is dLoss/dx.
        """
        expected = [(l.weights.shape, l.bias.shape) for l in self.layers]
        if cache.layer_shapes != expected:
            raise ShapeError("cache does not match this network")
        grad_out = np.asarray(grad_out, dtype=np.float64)
        g = grad_out.reshape(1, -1) if grad_out.ndim == 1 else grad_out
        if g.ndim != 2 or g.shape[1] != self.output_dim:
            raise ShapeError(
                f"grad_out shape {grad_out.shape} does not match output dim "
                f"{self.output_dim}"
            )
        if g.shape[0] != cache.inputs[0].shape[0]:
            raise ShapeError("grad_out batch size does not match cache")
        param_grads = [None] * (2 * len(self.layers))
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            dz = g * _activate_grad(cache.pre_activations[i], layer.activation)
            param_grads[2 * i] = dz.T @ cache.inputs[i]
            param_grads[2 * i + 1] = dz.sum(axis=0)
            g = dz @ layer.weights
        grad_in = g[0] if cache.single else g
        return param_grads, grad_in


def mse_loss(x_hat, x):
    """Mean-squared error over all entries, with gradients for BOTH
    arguments (both may depend on the parameters being optimized).

    For batches of shape (n, d) this is the mean per-sample MSE.
    """
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x_hat.shape != x.shape:
        raise ShapeError(
            f"mse_loss arguments must match, got {x_hat.shape} and {x.shape}"
        )
    diff = x_hat - x
    loss = float(np.mean(diff * diff))
    grad_hat = 2.0 * diff / diff.size
    return loss, grad_hat, -grad_hat


class Adam:
    """Adaptive-moment optimizer over a list of parameter arrays.

    Updates are applied in place; state mirrors parameter shapes.
    """

    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999,
                 eps=1e-8):
        if learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        if len(params) != len(self.m) or len(grads) != len(params):
            raise ShapeError("optimizer state does not match parameter list")
        for i, g in enumerate(grads):
            if not np.all(np.isfinite(g)):
                raise TrainingDivergedError(
                    f"non-finite gradient for parameter {i} "
                    f"(shape {np.shape(g)})"
                )
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for i, (p, g) in enumerate(zip(params, grads)):
            if p.shape != self.m[i].shape:
                raise ShapeError(f"parameter {i} shape changed mid-training")
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            p -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def finite_diff_grad(loss_fn, params, step=1e-5):
    """Central-difference gradient of a scalar loss over a parameter list.

    Independent oracle for gradient tests; O(#scalars) loss evaluations.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    grads = []
    work = [p.copy() for p in params]
    for i, p in enumerate(work):
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            up = loss_fn(work)
            flat[j] = orig - step
            down = loss_fn(work)
            flat[j] = orig
            gflat[j] = (up - down) / (2.0 * step)
        grads.append(g)
    return grads


def param_hash(params):
    """SHA-256 over parameter bytes; detects any mutation."""
    h = hashlib.sha256()
    for p in params:
        h.update(str(p.shape).encode())
        h.update(np.ascontiguousarray(p, dtype=np.float64).tobytes())
    return h.hexdigest()
