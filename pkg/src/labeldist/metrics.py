"""Scalar evaluation metrics for expectation-style predictions."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, InvalidArgument

__all__ = ["EvalReport", "mae", "rmse", "epsilon_error", "pearson", "evaluate"]


@dataclass
class EvalReport:
    """Evaluation summary. epsilon_error is None when no tolerance widths exist."""

    n: int
    mae: float
    rmse: float
    pearson: float
    epsilon_error: float | None = None

    def to_dict(self) -> dict:
        d = {"n": self.n, "mae": self.mae, "rmse": self.rmse, "pearson": self.pearson}
        if self.epsilon_error is not None:
            d["epsilon_error"] = self.epsilon_error
        return d


def _paired(pred, truth):
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.ndim != 1 or pred.shape != truth.shape:
        raise InvalidArgument(
            f"predictions and truths must be equal-length vectors, got {pred.shape} vs {truth.shape}"
        )
    if pred.size == 0:
        raise DegenerateInput("cannot score an empty prediction set")
    return pred, truth


def mae(pred, truth) -> float:
    """Mean absolute error."""
    pred, truth = _paired(pred, truth)
    return float(np.mean(np.abs(pred - truth)))


def rmse(pred, truth) -> float:
    """Root mean squared error. Never below mae on the same pairs."""
    pred, truth = _paired(pred, truth)
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def epsilon_error(pred, truth, sigmas) -> float:
    """Mean of 1 - exp(-(pred - truth)^2 / (2 sigma^2)).

    Zero for perfect predictions, saturating toward 1 as errors grow past
    the per-sample tolerance width sigma. An error of exactly sigma scores
    1 - exp(-1/2).
    """
    pred, truth = _paired(pred, truth)
    sigmas = np.broadcast_to(np.asarray(sigmas, dtype=float), pred.shape)
    if np.any(sigmas <= 0) or not np.all(np.isfinite(sigmas)):
        raise InvalidArgument("tolerance widths must be positive and finite")
    return float(np.mean(1.0 - np.exp(-((pred - truth) ** 2) / (2.0 * sigmas**2))))


def pearson(a, b) -> float:
    """Pearson correlation, exactly 1 for any positively scaled affine match."""
    a, b = _paired(a, b)
    da = a - a.mean()
    db = b - b.mean()
    va = float(da @ da)
    vb = float(db @ db)
    if va == 0.0 or vb == 0.0:
        raise DegenerateInput("correlation undefined for a zero-variance input")
    r = float(da @ db) / np.sqrt(va * vb)
    return float(np.clip(r, -1.0, 1.0))


def evaluate(pred, truth, sigmas=None) -> EvalReport:
    """Bundle all metrics over one prediction set."""
    pred, truth = _paired(pred, truth)
    eps = None if sigmas is None else epsilon_error(pred, truth, sigmas)
    return EvalReport(
        n=int(pred.size),
        mae=mae(pred, truth),
        rmse=rmse(pred, truth),
        pearson=pearson(pred, truth),
        epsilon_error=eps,
    )
