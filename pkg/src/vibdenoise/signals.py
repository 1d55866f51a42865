"""Synthetic vibration signals, noise models and windowed datasets.

All random draws use ``numpy.random.default_rng(seed)`` (PCG64), one fresh
generator per call, so every generator here is a pure function of its
arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import EmptySpec, LengthMismatch, NyquistViolation, WindowTooLong

STD_FLOOR = 1e-12

#: (amplitude, frequency Hz, phase rad) triples of the default shaft-like signal.
DEFAULT_COMPONENTS = ((1.0, 13.0, 0.0), (0.5, 48.0, 1.0), (0.25, 80.0, 2.0))


@dataclass(frozen=True)
class Signal:
    samples: np.ndarray
    sample_rate: float
    label: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise EmptySpec("signal must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise ValueError("signal contains non-finite samples")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate


@dataclass(frozen=True)
class SignalSpec:
    components: tuple = DEFAULT_COMPONENTS
    duration: float = 1.0
    sample_rate: float = 1000.0

    def __post_init__(self):
        object.__setattr__(
            self, "components", tuple(tuple(float(v) for v in c) for c in self.components)
        )
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        nyquist = self.sample_rate / 2
        for amplitude, freq, phase in self.components:
            if freq >= nyquist:
                raise NyquistViolation(
                    f"component at {freq} Hz is not below Nyquist ({nyquist} Hz)"
                )

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "gaussian"
    variance: float = 0.1
    seed: int = 0

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in ("gaussian", "brownian"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not self.variance >= 0:
            raise ValueError("noise variance must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    def describe(self) -> str:
        return f"{self.kind}(var={self.variance!r},seed={self.seed})"


def synth_clean(spec: SignalSpec) -> Signal:
    """Sum of sinusoids ``A*sin(2*pi*f*t + phi)`` sampled on ``t = i / rate``."""
    n = spec.n_samples
    if n < 1:
        raise EmptySpec("duration * sample_rate yields no samples")
    t = np.arange(n) / spec.sample_rate
    x = np.zeros(n)
    for amplitude, freq, phase in spec.components:
        x += amplitude * np.sin(2 * np.pi * freq * t + phase)
    return Signal(x, spec.sample_rate, label="clean")


def _increments(n, variance, seed):
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, np.sqrt(variance), size=n)


def add_gaussian_noise(signal: Signal, spec: NoiseSpec) -> Signal:
    if spec.kind != "gaussian":
        raise ValueError("add_gaussian_noise needs a gaussian NoiseSpec")
    if spec.variance == 0:
        return Signal(signal.samples.copy(), signal.sample_rate, signal.label + "+gaussian")
    noise = _increments(len(signal), spec.variance, spec.seed)
    return Signal(signal.samples + noise, signal.sample_rate, signal.label + "+gaussian")


def add_brownian_noise(signal: Signal, spec: NoiseSpec) -> Signal:
    if spec.kind != "brownian":
        raise ValueError("add_brownian_noise needs a brownian NoiseSpec")
    if spec.variance == 0:
        return Signal(signal.samples.copy(), signal.sample_rate, signal.label + "+brownian")
    walk = np.cumsum(_increments(len(signal), spec.variance, spec.seed))
    return Signal(signal.samples + walk, signal.sample_rate, signal.label + "+brownian")


def add_noise(signal: Signal, spec: NoiseSpec) -> Signal:
    if spec.kind == "gaussian":
        return add_gaussian_noise(signal, spec)
    return add_brownian_noise(signal, spec)


def segment(signal, window_len: int, hop: int) -> np.ndarray:
    """Cut ``signal`` into windows starting at 0, hop, 2*hop, ...

    Returns an array of shape ``(n_windows, window_len)``; a trailing piece
    shorter than ``window_len`` is dropped.
    """
    x = signal.samples if isinstance(signal, Signal) else np.asarray(signal, dtype=np.float64)
    if window_len < 1 or hop < 1:
        raise ValueError("window_len and hop must be >= 1")
    if window_len > x.size:
        raise WindowTooLong(f"window_len {window_len} exceeds signal length {x.size}")
    starts = np.arange(0, x.size - window_len + 1, hop)
    return np.stack([x[s:s + window_len] for s in starts])


def normalize_window(window):
    window = np.asarray(window, dtype=np.float64)
    if window.size == 0:
        raise ValueError("window must be nonempty")
    mean = float(window.mean())
    std = float(window.std())
    return (window - mean) / max(std, STD_FLOOR), (mean, std)


def denormalize_window(normalized, stats):
    mean, std = stats
    return np.asarray(normalized, dtype=np.float64) * max(std, STD_FLOOR) + mean


@dataclass
class WindowedDataset:
    """Aligned noisy/clean window pairs.

    ``noisy`` and ``clean`` hold the raw windows, shape ``(n, window_len)``.
    ``means``/``stds`` are the per-pair statistics of the noisy window; they
    normalize both members of the pair.
    """

    noisy: np.ndarray
    clean: np.ndarray
    means: np.ndarray = field(default=None)
    stds: np.ndarray = field(default=None)

    def __post_init__(self):
        self.noisy = np.atleast_2d(np.asarray(self.noisy, dtype=np.float64))
        self.clean = np.atleast_2d(np.asarray(self.clean, dtype=np.float64))
        if self.noisy.shape != self.clean.shape:
            raise LengthMismatch(
                f"noisy {self.noisy.shape} and clean {self.clean.shape} windows differ"
            )
        if self.means is None or self.stds is None:
            self.means = self.noisy.mean(axis=1)
            self.stds = self.noisy.std(axis=1)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.stds = np.asarray(self.stds, dtype=np.float64)

    @property
    def window_len(self) -> int:
        return self.noisy.shape[1]

    def __len__(self):
        return self.noisy.shape[0]

    def __getitem__(self, i):
        return self.noisy[i], self.clean[i], (float(self.means[i]), float(self.stds[i]))

    @property
    def pairs(self):
        return [self[i] for i in range(len(self))]

    def subset(self, indices) -> "WindowedDataset":
        idx = np.asarray(indices, dtype=np.intp)
        return WindowedDataset(
            self.noisy[idx], self.clean[idx], self.means[idx], self.stds[idx]
        )

    def _scale(self):
        return np.maximum(self.stds, STD_FLOOR)[:, None]

    def normalized(self):
        """Return ``(noisy_n, clean_n)`` scaled by the noisy-window statistics."""
        scale = self._scale()
        centre = self.means[:, None]
        return (self.noisy - centre) / scale, (self.clean - centre) / scale

    def denormalize(self, windows) -> np.ndarray:
        return np.asarray(windows) * self._scale() + self.means[:, None]


def build_dataset(clean: Signal, noise: NoiseSpec, window_len: int, hop: int) -> WindowedDataset:
    noisy = add_noise(clean, noise)
    return WindowedDataset(segment(noisy, window_len, hop), segment(clean, window_len, hop))


def offset_signal(signal: Signal, offset: int) -> Signal:
    """Drop the first ``offset`` samples, e.g. to cut test windows between training window starts."""
    return Signal(signal.samples[offset:], signal.sample_rate, signal.label)


def check_same_length(a: Sequence, b: Sequence, what="sequences"):
    if len(a) != len(b):
        raise LengthMismatch(f"{what} differ in length: {len(a)} vs {len(b)}")
