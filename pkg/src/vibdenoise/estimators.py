"""scikit-learn compatible wrappers around the AR and transformer denoisers.

Both treat each row of ``X`` as one signal window, so they drop into
``Pipeline``, ``clone`` and ``GridSearchCV`` like any other estimator::

    >>> den = TransformerDenoiser(d_model=16, n_heads=4, d_ff=16, epochs=5)
    >>> den.fit(noisy_windows, clean_windows).predict(noisy_windows)
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .ar import RefineConfig, ar_denoise_iterative
from .signals import WindowedDataset
from .training import TrainConfig, predict, train
from .transformer import ModelConfig


class ARDenoiser(TransformerMixin, BaseEstimator):
    """Per-row autoregressive denoising.

    Every row gets its own order selection and Yule-Walker fit, so there is
    nothing to learn in ``fit`` beyond the input width.

    Parameters
    ----------
    p_max : int
        Largest AR order considered by the information criterion.
    criterion : {"aic", "bic"}
    max_iterations : int
        Refinement passes; 0 returns the input unchanged.
    min_residual_delta : float
        Stop refining once the residual variance improves by less than this.
    """

    def __init__(self, p_max=20, criterion="aic", max_iterations=1, min_residual_delta=1e-6):
        self.p_max = p_max
        self.criterion = criterion
        self.max_iterations = max_iterations
        self.min_residual_delta = min_residual_delta

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if self.criterion not in ("aic", "bic"):
            raise ValueError(f"criterion must be 'aic' or 'bic', got {self.criterion!r}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        refine = RefineConfig(self.max_iterations, self.min_residual_delta)
        return np.stack([ar_denoise_iterative(row, self.p_max, self.criterion, refine)[0] for row in X])


class TransformerDenoiser(RegressorMixin, BaseEstimator):
    """Transformer encoder trained to map noisy windows onto clean ones.

    ``X`` holds noisy windows and ``y`` the aligned clean windows, both of
    shape ``(n_windows, seq_len)``. Each pair is normalized by the statistics
    of its noisy window before training, and ``predict`` maps outputs back
    to the input amplitude. ``seq_len=None`` takes the width of ``X``.
    """

    def __init__(self, seq_len=None, d_model=64, n_heads=8, d_ff=64, n_blocks=1, ln_eps=1e-6,
                 positional_encoding="sinusoidal", epochs=50, batch_size=32, val_fraction=0.2,
                 learning_rate=1e-3, adam_beta1=0.9, adam_beta2=0.999, adam_eps=1e-8, random_state=0):
        self.seq_len = seq_len
        self.d_model = d_model
        self.n_heads = n_heads
        self.d_ff = d_ff
        self.n_blocks = n_blocks
        self.ln_eps = ln_eps
        self.positional_encoding = positional_encoding
        self.epochs = epochs
        self.batch_size = batch_size
        self.val_fraction = val_fraction
        self.learning_rate = learning_rate
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.adam_eps = adam_eps
        self.random_state = random_state

    def _configs(self, width):
        model = ModelConfig(
            seq_len=self.seq_len or width, d_model=self.d_model, n_heads=self.n_heads, d_ff=self.d_ff,
            n_blocks=self.n_blocks, ln_eps=self.ln_eps, positional_encoding=self.positional_encoding,
        )
        seed = 0 if self.random_state is None else int(self.random_state)
        train_cfg = TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size, val_fraction=self.val_fraction,
            learning_rate=self.learning_rate, adam_beta1=self.adam_beta1, adam_beta2=self.adam_beta2,
            adam_eps=self.adam_eps, seed=seed,
        )
        return model, train_cfg

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = check_array(y, dtype=np.float64)
        if X.shape != y.shape:
            raise ValueError(f"X {X.shape} and y {y.shape} must have the same shape")
        model_cfg, train_cfg = self._configs(X.shape[1])
        run = train(WindowedDataset(X, y), model_cfg, train_cfg)
        self.config_ = model_cfg
        self.params_ = run.params
        self.history_ = run.history
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return predict(self.params_, self.config_, WindowedDataset(X, X))
