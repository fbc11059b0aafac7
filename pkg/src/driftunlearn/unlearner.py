"""Drift-unlearning map.

Fits a corrective mapping f: X -> X on a window of post-drift samples so
that transformed samples reconstruct well under a frozen autoencoder,
with an L1 penalty C * ||f(x) - x||_1 tying f to the identity. Deployed
inference applies f alone (never autoencoder-then-f chaining): downstream
models consume f(x) directly.

The objective, per sample and in original feature space:

    mse(ae(f(x)), f(x)) + C * ||f(x) - x||_1

Both occurrences of f receive gradient; the autoencoder contributes only
input gradients and is never mutated.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import nn
from .exceptions import DataError, ShapeError, TrainingDivergedError
from .validation import as_matrix, check_n_features, check_same_length

KINDS = ("affine", "mlp")


def identity_map(dim):
    """Affine map initialized at the exact identity (A = I, b = 0)."""
    if dim < 1:
        raise ShapeError("dim must be >= 1")
    layer = nn.DenseLayer(np.eye(dim), np.zeros(dim), "identity")
    return nn.DenseNetwork([layer])


def l1_penalty_grad(f_out, x):
    """Subgradient of ||f_out - x||_1 w.r.t. f_out, with sign(0) = 0."""
    f_out = np.asarray(f_out, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    check_same_length(f_out, x, "f_out", "x")
    return np.sign(f_out - x)


def unlearn_objective(ae, map_net, X, C):
    """Mean objective of the corrective map over X (original space)."""
    X = as_matrix(X, "X")
    check_n_features(X, map_net.input_dim, "X")
    if C < 0:
        raise ValueError("C must be >= 0")
    u, _ = map_net.forward(X)
    recon = ae.reconstruct(u)
    mse = np.mean((recon - u) ** 2, axis=1)
    l1 = np.abs(u - X).sum(axis=1)
    return float(np.mean(mse + C * l1))


def objective_and_grad(ae, map_net, X, C):
    """Objective value and its exact gradient w.r.t. the map parameters.

    Gradient flows through both occurrences of the map output: into the
    autoencoder (via its input gradient) and into both the direct mse
    argument and the L1 penalty.
    """
    m, d = X.shape
    u, cache = map_net.forward(X)
    recon, pullback = ae.reconstruct_with_pullback(u)
    diff = recon - u
    g_recon = 2.0 * diff / (m * d)
    g_u = pullback(g_recon) - g_recon + (C / m) * np.sign(u - X)
    grads, _ = map_net.backward(cache, g_u)
    value = float(np.mean(np.mean(diff * diff, axis=1)
                          + C * np.abs(u - X).sum(axis=1)))
    return value, grads


class DriftUnlearner(BaseEstimator, TransformerMixin):
    """Corrective input mapping fitted against a frozen autoencoder.

    Parameters
    ----------
    autoencoder : Autoencoder
        Frozen reference model; shared read-only, never mutated.
    C : float
        L1 regularization strength tying f to the identity (>= 0).
    kind : {"affine", "mlp"}
        Affine (default): a single linear layer, initialized at the
        identity so the no-op solution is always reachable and the
        penalty starts at exactly zero. "mlp" adds one tanh hidden
        layer for nonlinear drifts (random init).
    hidden_dim : int or None
        Hidden width for the mlp kind; default max(8, d/2).
    learning_rate, batch_size, max_epochs, tol, patience
        Adam schedule over the post-drift window; early stop on < tol
        improvement of the full objective within `patience` epochs.
        The returned parameters are the best iterate seen, so the final
        objective never exceeds the initialization objective.
    min_samples : int
        Minimum post-drift window size.
    random_state : int or None
        Seed for shuffling (and mlp init).
    """

    def __init__(self, autoencoder=None, C=0.1, kind="affine", hidden_dim=None,
                 learning_rate=1e-2, batch_size=32, max_epochs=300,
                 tol=1e-6, patience=20, min_samples=50, random_state=None):
        self.autoencoder = autoencoder
        self.C = C
        self.kind = kind
        self.hidden_dim = hidden_dim
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.tol = tol
        self.patience = patience
        self.min_samples = min_samples
        self.random_state = random_state

    def fit(self, X, y=None):
        ae = self.autoencoder
        if ae is None or not getattr(ae, "frozen_", False):
            raise NotFittedError(
                "autoencoder must be fitted (frozen) before unlearning"
            )
        if self.C < 0:
            raise ValueError("C must be >= 0")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        X = as_matrix(X, "X")
        n, d = X.shape
        check_n_features(X, ae.n_features_in_, "X")
        if n < self.min_samples:
            raise DataError(
                f"need at least {self.min_samples} post-drift samples, got {n}"
            )

        rng = np.random.default_rng(self.random_state)
        if self.kind == "affine":
            net = identity_map(d)
        else:
            hidden = self.hidden_dim if self.hidden_dim is not None else max(8, d // 2)
            net = nn.DenseNetwork.init_random([d, hidden, d], ["tanh", "identity"], rng)

        params = net.parameters()
        opt = nn.Adam(params, learning_rate=self.learning_rate)
        ae_hash = ae.param_hash()

        init_objective = unlearn_objective(ae, net, X, self.C)
        best = init_objective
        best_params = [p.copy() for p in params]
        history = [init_objective]
        stale = 0
        for epoch in range(self.max_epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                xb = X[order[start:start + self.batch_size]]
                _, grads = objective_and_grad(ae, net, xb, self.C)
                opt.step(params, grads)
            objective = unlearn_objective(ae, net, X, self.C)
            if not np.isfinite(objective):
                raise TrainingDivergedError(
                    f"non-finite unlearning objective at epoch {epoch}"
                )
            history.append(objective)
            if objective < best - self.tol:
                stale = 0
            else:
                stale += 1
            if objective < best:
                best = objective
                best_params = [p.copy() for p in params]
            if stale >= self.patience:
                break

        net.set_parameters(best_params)
        if ae.param_hash() != ae_hash:
            raise RuntimeError("frozen autoencoder was mutated during fit")
        self.map_ = net
        self.n_features_in_ = d
        self.n_fitted_ = n
        self.init_objective_ = init_objective
        self.objective_ = best
        self.objective_history_ = history
        return self

    def transform(self, X):
        """Apply the corrective map; pure, no internal state."""
        if not hasattr(self, "map_"):
            raise NotFittedError("unlearner is not fitted")
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X2 = as_matrix(X, "X")
        check_n_features(X2, self.n_features_in_, "X")
        out, _ = self.map_.forward(X2)
        return out[0] if single else out

    @property
    def weights_(self):
        """Affine matrix A (affine kind only)."""
        if not hasattr(self, "map_"):
            raise NotFittedError("unlearner is not fitted")
        if self.kind != "affine":
            raise AttributeError("weights_ is only defined for the affine kind")
        return self.map_.layers[0].weights

    @property
    def bias_(self):
        if not hasattr(self, "map_"):
            raise NotFittedError("unlearner is not fitted")
        if self.kind != "affine":
            raise AttributeError("bias_ is only defined for the affine kind")
        return self.map_.layers[0].bias
