"""SNR-based validation of denoisers against a clean reference."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .exceptions import AlignmentMismatch, LengthMismatch, ZeroReference

SNR_CAP_DB = 300.0
REPORT_COLUMNS = ("window_idx", "snr_noisy_db", "snr_denoised_db", "improvement_db", "mse")


def snr_db(clean, estimate) -> float:
    """``10 log10(sum clean^2 / sum (clean - estimate)^2)``, capped at +300 dB."""
    clean = np.asarray(clean, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if clean.shape != estimate.shape:
        raise LengthMismatch(f"clean {clean.shape} and estimate {estimate.shape} differ")
    signal = float(np.sum(clean * clean))
    if signal == 0:
        raise ZeroReference("clean reference has zero energy")
    err = clean - estimate
    noise = float(np.sum(err * err))
    if noise == 0:
        return SNR_CAP_DB
    return min(10.0 * np.log10(signal / noise), SNR_CAP_DB)


def snr_improvement_db(clean, noisy, denoised) -> float:
    return snr_db(clean, denoised) - snr_db(clean, noisy)


def rmse(a, b) -> float:
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return float(np.sqrt(np.mean(d * d)))


@dataclass
class DenoiseReport:
    snr_noisy_db: np.ndarray
    snr_denoised_db: np.ndarray
    mse: np.ndarray
    method: str = ""
    noise: str = ""

    @property
    def improvement_db(self) -> np.ndarray:
        return self.snr_denoised_db - self.snr_noisy_db

    def __len__(self):
        return self.snr_noisy_db.size

    def aggregates(self) -> dict:
        out = {}
        for name in REPORT_COLUMNS[1:]:
            values = getattr(self, name)
            out[f"mean_{name}"] = float(np.mean(values))
            out[f"median_{name}"] = float(np.median(values))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for i in range(len(self)):
            writer.writerow([i] + [repr(float(getattr(self, c)[i])) for c in REPORT_COLUMNS[1:]])
        buf.write(f"# method={self.method}\n# noise={self.noise}\n")
        for key, value in self.aggregates().items():
            buf.write(f"# {key}={value!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DenoiseReport":
        meta = {}
        lines = text.splitlines()
        for line in lines:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
        reader = csv.reader(line for line in lines if line and not line.startswith("#"))
        header = next(reader)
        if tuple(header) != REPORT_COLUMNS:
            raise ValueError(f"unexpected report header {header}")
        rows = np.array([[float(v) for v in row[1:]] for row in reader]).reshape(-1, 4)
        return cls(rows[:, 0], rows[:, 1], rows[:, 3], meta.get("method", ""), meta.get("noise", ""))


def report(clean, noisy, denoised, method: str = "", noise: str = "") -> DenoiseReport:
    """Per-window SNR rows for aligned ``(n_windows, window_len)`` arrays in amplitude space."""
    clean, noisy, denoised = (np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in (clean, noisy, denoised))
    if not clean.shape == noisy.shape == denoised.shape:
        raise AlignmentMismatch(
            f"clean {clean.shape}, noisy {noisy.shape} and denoised {denoised.shape} are not aligned"
        )
    snr_in = np.array([snr_db(c, n) for c, n in zip(clean, noisy)])
    snr_out = np.array([snr_db(c, d) for c, d in zip(clean, denoised)])
    mse = np.mean((clean - denoised) ** 2, axis=1)
    return DenoiseReport(snr_in, snr_out, mse, method, noise)
