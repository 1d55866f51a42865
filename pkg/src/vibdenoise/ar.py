"""Autoregressive denoising: Yule-Walker fitting, AIC/BIC order selection,
one-step-prediction reconstruction and iterative refinement."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateInput, LagTooLarge, OrderTooLarge


@dataclass(frozen=True)
class ARModel:
    """``x_hat[t] = sum_i coeffs[i-1] * x[t-i]`` with innovation variance ``sigma2``."""

    coeffs: np.ndarray
    innovation_variance: float

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(coeffs)) or not np.isfinite(self.innovation_variance):
            raise DegenerateInput("AR model has non-finite parameters")
        if self.innovation_variance < 0:
            raise ValueError("innovation variance must be >= 0")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def order(self) -> int:
        return self.coeffs.size

    def to_record(self) -> str:
        """Text record ``order, a1, ..., ap, sigma2`` at round-trip precision."""
        fields = [str(self.order)] + [repr(float(a)) for a in self.coeffs]
        fields.append(repr(float(self.innovation_variance)))
        return ", ".join(fields)

    @classmethod
    def from_record(cls, line: str) -> "ARModel":
        parts = [p.strip() for p in line.split(",")]
        order = int(parts[0])
        if len(parts) != order + 2:
            raise ValueError(f"AR record with order {order} needs {order + 2} fields")
        return cls(np.array([float(v) for v in parts[1:-1]]), float(parts[-1]))


@dataclass(frozen=True)
class OrderSelection:
    criterion: str
    p_max: int
    scores: list = field(default_factory=list)

    @property
    def order(self) -> int:
        # np.argmin returns the first minimum, i.e. ties go to the smaller order
        return int(np.argmin([s for _, s in self.scores]))


@dataclass(frozen=True)
class RefineConfig:
    max_iterations: int = 3
    min_residual_delta: float = 1e-6

    def __post_init__(self):
        if self.max_iterations < 0 or self.min_residual_delta < 0:
            raise ValueError("refinement settings must be non-negative")


def autocorrelation(x, max_lag: int) -> np.ndarray:
    """Biased autocorrelation ``r(k) = 1/N sum_t x_t x_{t+k}`` of the mean-removed series."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if max_lag < 0 or max_lag >= n:
        raise LagTooLarge(f"max_lag {max_lag} must be in [0, {n})")
    xc = x - x.mean()
    return np.array([np.dot(xc[: n - k], xc[k:]) for k in range(max_lag + 1)]) / n


def levinson_durbin(r, p: int) -> np.ndarray:
    """Solve the order-``p`` Yule-Walker system ``R a = r[1:p+1]``.

    ``R`` is the symmetric Toeplitz matrix built from ``r[0:p]``.
    """
    r = np.asarray(r, dtype=np.float64)
    a = np.zeros(p)
    err = r[0]
    for m in range(p):
        if not err > 0:
            raise DegenerateInput(f"prediction error vanished at order {m}")
        k = (r[m + 1] - np.dot(a[:m], r[m:0:-1])) / err
        a[:m] = a[:m] - k * a[:m][::-1]
        a[m] = k
        err *= 1.0 - k * k
    return a


def yule_walker_fit(x, p: int) -> ARModel:
    x = np.asarray(x, dtype=np.float64)
    if p < 0 or p >= x.size:
        raise OrderTooLarge(f"order {p} needs more than {p} samples, got {x.size}")
    r = autocorrelation(x, p)
    if p == 0:
        return ARModel(np.zeros(0), float(r[0]))
    if r[0] == 0:
        raise DegenerateInput("constant signal has no autocorrelation structure")
    a = levinson_durbin(r, p)
    sigma2 = r[0] - np.dot(a, r[1:])
    return ARModel(a, max(float(sigma2), 0.0))


def information_criterion(sigma2: float, n: int, p: int, criterion: str) -> float:
    criterion = criterion.lower()
    with np.errstate(divide="ignore"):
        fit = n * np.log(sigma2)
    if criterion == "aic":
        return float(fit + 2 * p)
    if criterion == "bic":
        return float(fit + p * np.log(n))
    raise ValueError(f"unknown criterion {criterion!r}")


def select_order(x, p_max: int, criterion: str = "aic") -> OrderSelection:
    x = np.asarray(x, dtype=np.float64)
    if p_max < 0 or p_max >= x.size:
        raise OrderTooLarge(f"p_max {p_max} needs more than {p_max} samples")
    scores = []
    for p in range(p_max + 1):
        model = yule_walker_fit(x, p)
        scores.append((p, information_criterion(model.innovation_variance, x.size, p, criterion)))
    return OrderSelection(criterion.lower(), p_max, scores)


def ar_denoise(x, model: ARModel) -> np.ndarray:
    """One-step AR prediction of ``x``; the first ``order`` samples pass through."""
    x = np.asarray(x, dtype=np.float64)
    p = model.order
    if p >= x.size:
        raise OrderTooLarge(f"model order {p} needs more than {p} samples")
    out = x.copy()
    if p == 0:
        return out
    mean = x.mean()
    xc = x - mean
    pred = np.zeros(x.size - p)
    for i, a in enumerate(model.coeffs, start=1):
        pred += a * xc[p - i: x.size - i]
    out[p:] = pred + mean
    return out


def residual_variance(x, denoised, order: int) -> float:
    """Mean squared residual over the predicted samples ``t >= order``."""
    resid = np.asarray(x)[order:] - np.asarray(denoised)[order:]
    return float(np.mean(resid * resid))


def ar_denoise_iterative(x, p_max: int, criterion: str = "aic", refine: RefineConfig = None):
    """Repeatedly select an order, fit and reconstruct, feeding each output back in.

    Returns ``(denoised, models)``. An iteration that would raise the
    residual variance is discarded and ends the loop, so the residual
    variances of the accepted iterations never increase.
    """
    refine = refine or RefineConfig()
    current = np.asarray(x, dtype=np.float64).copy()
    models = []
    previous = None
    for _ in range(refine.max_iterations):
        order = select_order(current, p_max, criterion).order
        model = yule_walker_fit(current, order)
        candidate = ar_denoise(current, model)
        resid = residual_variance(current, candidate, order)
        if previous is not None and resid > previous:
            break
        models.append(model)
        current = candidate
        if previous is not None and previous - resid < refine.min_residual_delta:
            break
        previous = resid
    return current, models
