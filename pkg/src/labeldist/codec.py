"""Label grid construction and the three target encodings.

A scalar target y on an evenly spaced label grid can be encoded three ways:
as a discrete Gaussian probability vector over the grid, as the Gaussian
cumulative distribution sampled at the grid points, or as the exact binary
prefix vector used by threshold-ranking heads. The cumulative and ranking
views are linked: one minus the running sum of the probability vector
approximates the ranking vector, and the approximation tightens as sigma
shrinks toward zero for targets sitting on a grid point.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import DegenerateGrid, InvalidArgument, OutOfRangeTarget

__all__ = [
    "LabelSpace",
    "Distribution",
    "CdfVector",
    "RankingVector",
    "make_label_space",
    "encode_distribution",
    "encode_cdf",
    "encode_ranking",
    "cumulate",
    "ranking_from_distribution",
]

# Relative slack when checking that (l_max - l_min) / step is an integer.
_GRID_ALIGNMENT_TOL = 1e-9


@dataclass(frozen=True)
class LabelSpace:
    """Evenly spaced label grid with K = round((l_max - l_min) / step) + 1 points."""

    l_min: float
    l_max: float
    step: float
    labels: np.ndarray

    @property
    def size(self) -> int:
        return self.labels.shape[0]

    @property
    def span(self) -> float:
        return self.l_max - self.l_min

    def contains(self, y: float) -> bool:
        return self.l_min <= y <= self.l_max


@dataclass
class Distribution:
    """Probability vector over a label grid. Entries are nonnegative and sum to 1."""

    space: LabelSpace
    probs: np.ndarray


@dataclass
class CdfVector:
    """Nondecreasing cumulative values over a label grid, ending at 1 for proper mass."""

    space: LabelSpace
    values: np.ndarray


@dataclass
class RankingVector:
    """K-1 threshold indicators: entry i answers 'is the target above labels[i]?'."""

    space: LabelSpace
    values: np.ndarray


def make_label_space(l_min: float, l_max: float, step: float) -> LabelSpace:
    """Build the grid l_min, l_min + step, ..., l_max.

    The grid is generated by index arithmetic (l_min + i * step), never by
    repeated addition, so the endpoints stay exact to within one rounding.
    """
    if not np.isfinite(l_min) or not np.isfinite(l_max) or not np.isfinite(step):
        raise DegenerateGrid("grid bounds and step must be finite")
    if step <= 0:
        raise DegenerateGrid(f"step must be positive, got {step}")
    if l_max <= l_min:
        raise DegenerateGrid(f"need l_max > l_min, got [{l_min}, {l_max}]")
    ratio = (l_max - l_min) / step
    n_steps = round(ratio)
    if n_steps < 1 or abs(ratio - n_steps) > _GRID_ALIGNMENT_TOL * max(1.0, abs(ratio)):
        raise DegenerateGrid(
            f"span {l_max - l_min} is not an integer multiple of step {step}"
        )
    labels = l_min + step * np.arange(n_steps + 1, dtype=float)
    return LabelSpace(float(l_min), float(l_max), float(step), labels)


def encode_distribution(y: float, sigma: float, space: LabelSpace) -> Distribution:
    """Discrete Gaussian target encoding: probs proportional to exp(-(l_k - y)^2 / (2 sigma^2)).

    The vector is renormalized to sum to exactly 1; without that, the
    analytic gradient of the distribution loss would pick up a spurious
    constant. A target outside the grid is allowed but flagged with an
    OutOfRangeTarget warning; its mass piles up at the nearest edge.
    """
    if sigma <= 0 or not np.isfinite(sigma):
        raise InvalidArgument(f"sigma must be positive and finite, got {sigma}")
    if not np.isfinite(y):
        raise InvalidArgument(f"target must be finite, got {y}")
    if not space.contains(y):
        warnings.warn(
            f"target {y} outside grid [{space.l_min}, {space.l_max}]",
            OutOfRangeTarget,
            stacklevel=2,
        )
    z = -((space.labels - y) ** 2) / (2.0 * sigma * sigma)
    z -= z.max()  # largest entry becomes exp(0) = 1, so the sum can never underflow
    g = np.exp(z)
    return Distribution(space, g / g.sum())


def encode_cdf(y: float, sigma: float, space: LabelSpace) -> CdfVector:
    """Gaussian cumulative distribution sampled at the grid points.

    values[k] = 0.5 * (1 + erf((l_k - y) / (sigma * sqrt(2)))). Monotone
    nondecreasing in k for any sigma > 0.
    """
    if sigma <= 0 or not np.isfinite(sigma):
        raise InvalidArgument(f"sigma must be positive and finite, got {sigma}")
    if not np.isfinite(y):
        raise InvalidArgument(f"target must be finite, got {y}")
    values = 0.5 * (1.0 + erf((space.labels - y) / (sigma * np.sqrt(2.0))))
    return CdfVector(space, values)


def encode_ranking(y: float, space: LabelSpace) -> RankingVector:
    """Exact binary prefix vector: entry i is 1 when y > labels[i], for i < K-1.

    A target in the half-open cell (labels[i-1], labels[i]] yields exactly i
    leading ones. y = l_min gives the all-zero vector; targets outside the
    grid are rejected.
    """
    if not np.isfinite(y):
        raise InvalidArgument(f"target must be finite, got {y}")
    if not space.contains(y):
        raise InvalidArgument(
            f"ranking encoding requires {space.l_min} <= y <= {space.l_max}, got {y}"
        )
    values = (y > space.labels[:-1]).astype(float)
    return RankingVector(space, values)


def cumulate(dist: Distribution) -> CdfVector:
    """Running prefix sum of a probability vector.

    Equivalent to multiplying by the triangular ones matrix, computed as a
    cumulative sum. For a properly normalized input the last entry is 1 to
    within accumulated rounding.
    """
    return CdfVector(dist.space, np.cumsum(dist.probs))


def ranking_from_distribution(dist: Distribution) -> RankingVector:
    """Ranking approximation from a probability vector: 1 - prefix sum, truncated to K-1 entries.

    Clipped to [0, 1] to absorb -1e-15-scale rounding below zero. For mass
    concentrated on a single grid point this reproduces the exact ranking
    vector of that label; for mass straddling two grid points the entry at
    the straddled threshold is honestly intermediate.
    """
    values = 1.0 - np.cumsum(dist.probs)[:-1]
    return RankingVector(dist.space, np.clip(values, 0.0, 1.0))
