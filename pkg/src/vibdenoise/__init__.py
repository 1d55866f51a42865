"""Mechanical vibration signal denoising: autoregressive and transformer methods."""

from .ar import (
    ARModel,
    OrderSelection,
    RefineConfig,
    ar_denoise,
    ar_denoise_iterative,
    autocorrelation,
    select_order,
    yule_walker_fit,
)
from .estimators import ARDenoiser, TransformerDenoiser
from .metrics import DenoiseReport, report, snr_db
from .signals import (
    NoiseSpec,
    Signal,
    SignalSpec,
    WindowedDataset,
    add_brownian_noise,
    add_gaussian_noise,
    build_dataset,
    denormalize_window,
    normalize_window,
    segment,
    synth_clean,
)
from .training import AdamState, TrainConfig, TrainRun, adam_step, evaluate, mse_loss, split_dataset, train
from .transformer import ModelConfig, backward, forward, gradient_check, init_params

__version__ = "0.1.0"
