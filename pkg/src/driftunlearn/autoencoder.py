"""Distribution-modeling autoencoder.

An undercomplete encoder/decoder pair trained to reconstruct a drift-free
data window. After fit() the model is frozen: it serves as the fixed
reference that drift monitoring and unlearning measure against, and
nothing in this package mutates it afterwards. Feature standardization
(z-score of the training window) lives inside the model so every
consumer sees one consistent view.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import nn
from .exceptions import DataError, FrozenModelError, ShapeError, TrainingDivergedError
from .validation import as_matrix, check_n_features


def default_dims(input_dim):
    """Default undercomplete architecture: d -> max(8, d/2) -> max(4, d/4)."""
    hidden = max(8, input_dim // 2)
    latent = max(4, input_dim // 4)
    return hidden, latent


class Autoencoder(BaseEstimator, TransformerMixin):
    """Dense autoencoder with frozen-after-training semantics.

    Parameters
    ----------
    hidden_dim, latent_dim : int or None
        Encoder widths (mirrored in the decoder). Default: d -> max(8, d/2)
        -> max(4, d/4) -> mirror. latent_dim must stay below the input
        width so reconstruction error is informative.
    activation : str
        Hidden activation ("tanh" default; bounded and smooth, stable on
        standardized data). Output layers are linear.
    learning_rate, batch_size, max_epochs, tol, patience
        Adam training schedule; stops early when the best full-batch loss
        has not improved by tol within `patience` epochs.
    min_samples : int
        Minimum training-window size.
    random_state : int or None
        Seed for init and batch shuffling; fixes the fit bit-exactly.
    """

    def __init__(self, hidden_dim=None, latent_dim=None, activation="tanh",
                 learning_rate=1e-3, batch_size=32, max_epochs=500,
                 tol=1e-6, patience=20, min_samples=50, random_state=None):
        self.hidden_dim = hidden_dim
        self.latent_dim = latent_dim
        self.activation = activation
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.tol = tol
        self.patience = patience
        self.min_samples = min_samples
        self.random_state = random_state

    # -- fitting -----------------------------------------------------------

    def fit(self, X, y=None):
        if getattr(self, "frozen_", False):
            raise FrozenModelError(
                "this autoencoder is frozen; build a new estimator to refit"
            )
        X = as_matrix(X, "X")
        n, d = X.shape
        if n < self.min_samples:
            raise DataError(
                f"need at least {self.min_samples} samples to fit, got {n}"
            )
        hidden = self.hidden_dim if self.hidden_dim is not None else default_dims(d)[0]
        latent = self.latent_dim if self.latent_dim is not None else default_dims(d)[1]
        if latent >= d:
            raise ShapeError(
                f"latent_dim ({latent}) must be smaller than the input "
                f"width ({d})"
            )
        if not 0 < latent <= hidden:
            raise ShapeError("need 0 < latent_dim <= hidden_dim")

        self.n_features_in_ = d
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0  # zero-variance features pass through
        self.scale_ = scale

        rng = np.random.default_rng(self.random_state)
        act = self.activation
        encoder = nn.DenseNetwork.init_random([d, hidden, latent], [act, "identity"], rng)
        decoder = nn.DenseNetwork.init_random([latent, hidden, d], [act, "identity"], rng)
        self.encoder_ = encoder
        self.decoder_ = decoder

        Xs = (X - self.mean_) / self.scale_
        params = encoder.parameters() + decoder.parameters()
        opt = nn.Adam(params, learning_rate=self.learning_rate)

        def full_loss():
            z, _ = encoder.forward(Xs)
            xh, _ = decoder.forward(z)
            return float(np.mean((xh - Xs) ** 2))

        init_loss = full_loss()
        best_loss = np.inf
        best_params = None
        history = []
        stale = 0
        n_enc = len(encoder.parameters())
        for epoch in range(self.max_epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                batch = Xs[order[start:start + self.batch_size]]
                z, enc_cache = encoder.forward(batch)
                xh, dec_cache = decoder.forward(z)
                loss, g_hat, _ = nn.mse_loss(xh, batch)
                if not np.isfinite(loss):
                    raise TrainingDivergedError(
                        f"non-finite reconstruction loss at epoch {epoch}"
                    )
                dec_grads, g_z = decoder.backward(dec_cache, g_hat)
                enc_grads, _ = encoder.backward(enc_cache, g_z)
                opt.step(params, enc_grads + dec_grads)
            epoch_loss = full_loss()
            history.append(epoch_loss)
            if epoch_loss < best_loss - self.tol:
                stale = 0
            else:
                stale += 1
            if epoch_loss < best_loss:
                best_loss = epoch_loss
                best_params = [p.copy() for p in params]
            if stale >= self.patience:
                break

        if best_params is None or best_loss >= init_loss:
            raise TrainingDivergedError(
                "training failed to improve on the initial reconstruction loss"
            )
        encoder.set_parameters(best_params[:n_enc])
        decoder.set_parameters(best_params[n_enc:])
        self.loss_history_ = history
        self.initial_loss_ = init_loss
        self.final_loss_ = best_loss
        self.frozen_ = True
        return self

    @classmethod
    def from_components(cls, encoder, decoder, mean, scale):
        """Assemble a frozen model from explicit parts (tests, loading)."""
        if encoder.output_dim != decoder.input_dim:
            raise ShapeError("encoder output and decoder input disagree")
        if encoder.input_dim != decoder.output_dim:
            raise ShapeError("encoder input and decoder output disagree")
        if encoder.output_dim >= encoder.input_dim:
            raise ShapeError("model must be undercomplete (latent < input)")
        model = cls(latent_dim=encoder.output_dim)
        model.n_features_in_ = encoder.input_dim
        model.mean_ = np.asarray(mean, dtype=np.float64)
        model.scale_ = np.asarray(scale, dtype=np.float64)
        if model.mean_.shape != (model.n_features_in_,) or \
                model.scale_.shape != (model.n_features_in_,):
            raise ShapeError("scaler statistics do not match the input width")
        model.encoder_ = encoder
        model.decoder_ = decoder
        model.loss_history_ = []
        model.frozen_ = True
        return model

    # -- inference ---------------------------------------------------------

    def _check_fitted(self):
        if not getattr(self, "frozen_", False):
            raise NotFittedError("autoencoder is not fitted")

    def _check_input(self, X):
        self._check_fitted()
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X = as_matrix(X, "X")
        check_n_features(X, self.n_features_in_, "X")
        return X, single

    def scale(self, X):
        """Map to the standardized space the networks operate in."""
        X, single = self._check_input(X)
        out = (X - self.mean_) / self.scale_
        return out[0] if single else out

    def unscale(self, X):
        self._check_fitted()
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        check_n_features(X2, self.n_features_in_, "X")
        out = X2 * self.scale_ + self.mean_
        return out[0] if single else out

    def reconstruct(self, X):
        """unscale(decoder(encoder(scale(X)))); same shape as X."""
        X, single = self._check_input(X)
        z, _ = self.encoder_.forward((X - self.mean_) / self.scale_)
        xh, _ = self.decoder_.forward(z)
        out = xh * self.scale_ + self.mean_
        return out[0] if single else out

    def transform(self, X):
        """Alias for reconstruct, so the model drops into pipelines."""
        return self.reconstruct(X)

    def reconstruct_with_pullback(self, X):
        """Reconstruct and return (reconstruction, pullback) where
        pullback(dLoss/dreconstruction) yields dLoss/dX.

        Parameter gradients are discarded; the frozen model is never
        touched. This is the hook a corrective map trains through.
        """
        X, single = self._check_input(X)
        Xs = (X - self.mean_) / self.scale_
        z, enc_cache = self.encoder_.forward(Xs)
        xh, dec_cache = self.decoder_.forward(z)
        recon = xh * self.scale_ + self.mean_

        def pullback(grad_out):
            g = np.atleast_2d(np.asarray(grad_out, dtype=np.float64))
            if g.shape != X.shape:
                raise ShapeError(
                    f"grad_out shape {g.shape} must match X {X.shape}"
                )
            _, g_z = self.decoder_.backward(dec_cache, g * self.scale_)
            _, g_scaled_in = self.encoder_.backward(enc_cache, g_z)
            grad_in = g_scaled_in / self.scale_
            return grad_in[0] if single else grad_in

        return (recon[0] if single else recon), pullback

    def per_sample_loss(self, X):
        """Per-sample reconstruction MSE in the original feature space."""
        X, _ = self._check_input(X)
        diff = self.reconstruct(X) - X
        return np.mean(diff * diff, axis=1)

    def parameters(self):
        self._check_fitted()
        return self.encoder_.parameters() + self.decoder_.parameters()

    def param_hash(self):
        return nn.param_hash(self.parameters())


def reconstruction_loss(model, X):
    """Mean reconstruction MSE of `model` over the sample matrix X."""
    X = as_matrix(X, "X")
    return float(np.mean(model.per_sample_loss(X)))
