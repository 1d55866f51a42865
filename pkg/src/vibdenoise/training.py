"""Adam + MSE training loop with a seeded validation split."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import EmptyDataset, LengthMismatch, NumericError, SeqLenMismatch, ShapeMismatch
from .signals import WindowedDataset
from .transformer import ModelConfig, backward, forward, init_params, zeros_like_params

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    val_fraction: float = 0.2
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.val_fraction < 1:
            raise ValueError("val_fraction must lie in (0, 1)")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if not (self.learning_rate > 0 and self.adam_eps > 0):
            raise ValueError("learning_rate and adam_eps must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def zeros(cls, params: dict) -> "AdamState":
        return cls(zeros_like_params(params), zeros_like_params(params), 0)


@dataclass
class TrainRun:
    params: dict
    model_config: ModelConfig
    train_config: TrainConfig
    history: list = field(default_factory=list)  # (train_loss, val_loss) per epoch

    @property
    def seed(self) -> int:
        return self.train_config.seed


def mse_loss(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape or pred.size == 0:
        raise LengthMismatch(f"prediction {pred.shape} and target {target.shape} must match and be nonempty")
    diff = pred - target
    return float(np.mean(diff * diff))


def adam_step(params: dict, grads: dict, state: AdamState, config: TrainConfig):
    """One bias-corrected Adam update. Returns new ``(params, state)``; inputs are not mutated."""
    if params.keys() != grads.keys():
        raise ShapeMismatch("gradient tree does not match parameter tree")
    b1, b2 = config.adam_beta1, config.adam_beta2
    t = state.t + 1
    new_params, new_m, new_v = {}, {}, {}
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise ShapeMismatch(f"gradient for {name} has shape {g.shape}, expected {theta.shape}")
        m = b1 * state.m[name] + (1 - b1) * g
        v = b2 * state.v[name] + (1 - b2) * (g * g)
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        new_params[name] = theta - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
        new_m[name], new_v[name] = m, v
    return new_params, AdamState(new_m, new_v, t)


def split_dataset(dataset: WindowedDataset, val_fraction: float, seed: int):
    """Seeded shuffle, then the first ``floor(n * val_fraction)`` windows go to validation."""
    n = len(dataset)
    if n == 0:
        raise EmptyDataset("cannot split an empty dataset")
    order = np.random.default_rng([seed, 1]).permutation(n)
    n_val = int(np.floor(n * val_fraction))
    return dataset.subset(order[n_val:]), dataset.subset(order[:n_val])


def evaluate(params, config: ModelConfig, dataset: WindowedDataset):
    """Per-window and mean MSE in normalized space.

    Returns ``(per_window, aggregate)``.
    """
    if dataset.window_len != config.seq_len:
        raise SeqLenMismatch(f"windows of length {dataset.window_len} for seq_len {config.seq_len}")
    if len(dataset) == 0:
        return np.zeros(0), float("nan")
    noisy, clean = dataset.normalized()
    out, _ = forward(params, config, noisy)
    diff = out - clean
    per_window = np.mean(diff * diff, axis=1)
    return per_window, float(np.mean(per_window))


def predict(params, config: ModelConfig, dataset: WindowedDataset) -> np.ndarray:
    """Denoised windows in the original amplitude space."""
    noisy, _ = dataset.normalized()
    out, _ = forward(params, config, noisy)
    return dataset.denormalize(out)


def train(dataset: WindowedDataset, model_config: ModelConfig, train_config: TrainConfig,
          params: dict | None = None) -> TrainRun:
    if dataset.window_len != model_config.seq_len:
        raise SeqLenMismatch(
            f"dataset windows have length {dataset.window_len}, model expects {model_config.seq_len}"
        )
    train_set, val_set = split_dataset(dataset, train_config.val_fraction, train_config.seed)
    if len(train_set) == 0:
        raise EmptyDataset("validation split leaves no training windows")
    params = init_params(model_config, train_config.seed) if params is None else dict(params)
    state = AdamState.zeros(params)
    shuffler = np.random.default_rng([train_config.seed, 2])
    noisy, clean = train_set.normalized()
    run = TrainRun(params, model_config, train_config)
    bs = train_config.batch_size

    for epoch in range(train_config.epochs):
        order = shuffler.permutation(len(train_set))
        batch_losses = []
        for b, start in enumerate(range(0, len(order), bs)):
            idx = order[start:start + bs]
            loss, grads = backward(params, model_config, noisy[idx], clean[idx])
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch + 1}, batch {b}")
            params, state = adam_step(params, grads, state, train_config)
            batch_losses.append(loss)
        train_loss = float(np.mean(batch_losses))
        val_loss = evaluate(params, model_config, val_set)[1] if len(val_set) else float("nan")
        run.history.append((train_loss, val_loss))
        logger.info("epoch %d/%d train=%.6g val=%.6g", epoch + 1, train_config.epochs, train_loss, val_loss)

    run.params = params
    return run
