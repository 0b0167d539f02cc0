"""Prediction heads over a shared feature vector.

The main head maps features to logits over the label grid, reads the
prediction as a probability vector via softmax, and trains against a joint
objective: KL divergence to an encoded target distribution plus a weighted
absolute error on the distribution's expectation. Because inference is the
same expectation, training and inference optimize the same quantity.

Ablation heads live here too: plain metric regression with a squashed
scalar output, per-class cross-entropy with expectation inference, and a
bank of threshold classifiers. The distribution-only and expectation-only
ablations are not separate code paths; they are reachable as configurations
of the joint objective (weight 0, or the distribution term dropped).

All gradients are closed-form and are validated against central finite
differences by the gradcheck module.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .codec import Distribution, LabelSpace, RankingVector, encode_distribution
from .errors import InvalidArgument, NumericalDomain

__all__ = [
    "HeadParams",
    "JointLossConfig",
    "JointForward",
    "HeadGradients",
    "MrParams",
    "MrGradients",
    "RankingHeadParams",
    "RankingForward",
    "RankingGradients",
    "init_head",
    "init_mr_head",
    "init_ranking_head",
    "head_forward",
    "softmax",
    "expectation",
    "kl_loss",
    "er_loss",
    "joint_forward",
    "joint_backward",
    "mr_scale_target",
    "mr_forward",
    "mr_loss",
    "mr_backward",
    "mr_inference",
    "dex_class_index",
    "dex_loss",
    "dex_backward",
    "dex_inference",
    "ranking_forward",
    "ranking_loss",
    "ranking_backward",
    "ranking_inference",
]

# Floor applied inside logarithms only; stored probabilities are never modified.
_LOG_FLOOR = 1e-30


@dataclass
class HeadParams:
    """Dense layer producing one logit per grid point: logits = weight @ f + bias."""

    weight: np.ndarray  # (K, d)
    bias: np.ndarray  # (K,)
    space: LabelSpace


@dataclass
class JointLossConfig:
    """Joint objective: distribution term + expectation_weight * |expectation - target|.

    expectation_weight = 0 reduces to pure distribution matching;
    include_distribution_loss = False reduces to pure expectation regression.
    Both reductions run through the same forward/backward code.
    """

    expectation_weight: float = 1.0
    sigma: float = 2.0
    include_distribution_loss: bool = True

    def __post_init__(self):
        if self.expectation_weight < 0 or not np.isfinite(self.expectation_weight):
            raise InvalidArgument(
                f"expectation_weight must be >= 0, got {self.expectation_weight}"
            )
        if self.sigma <= 0 or not np.isfinite(self.sigma):
            raise InvalidArgument(f"sigma must be positive, got {self.sigma}")


@dataclass
class JointForward:
    """Everything the joint forward pass produces, kept for the backward pass."""

    y: float
    logits: np.ndarray
    target: Distribution
    pred: Distribution
    y_hat: float
    dist_loss: float
    exp_loss: float
    loss: float


@dataclass
class HeadGradients:
    d_logits: np.ndarray  # (K,)
    d_weight: np.ndarray  # (K, d)
    d_bias: np.ndarray  # (K,)
    d_features: np.ndarray  # (d,)


@dataclass
class MrParams:
    """Single-output regression head with a squashing nonlinearity."""

    weight: np.ndarray  # (d,)
    bias: float
    space: LabelSpace


@dataclass
class MrGradients:
    d_pre: float
    d_weight: np.ndarray
    d_bias: float
    d_features: np.ndarray


@dataclass
class RankingHeadParams:
    """K-1 threshold classifiers, one per interior grid boundary."""

    weight: np.ndarray  # (K-1, d)
    bias: np.ndarray  # (K-1,)
    space: LabelSpace


@dataclass
class RankingForward:
    z: np.ndarray  # pre-sigmoid scores
    outputs: np.ndarray  # sigmoid(z), each in (0, 1)


@dataclass
class RankingGradients:
    d_z: np.ndarray
    d_weight: np.ndarray
    d_bias: np.ndarray
    d_features: np.ndarray


def _init_dense(rng: np.random.Generator, rows: int, cols: int):
    # Zero-mean init scaled by sqrt(2 / fan_in); biases start at zero.
    w = rng.standard_normal((rows, cols)) * np.sqrt(2.0 / cols)
    return w, np.zeros(rows)


def init_head(space: LabelSpace, feature_dim: int, seed: int) -> HeadParams:
    w, b = _init_dense(np.random.default_rng(seed), space.size, feature_dim)
    return HeadParams(w, b, space)


def init_mr_head(space: LabelSpace, feature_dim: int, seed: int) -> MrParams:
    w, b = _init_dense(np.random.default_rng(seed), 1, feature_dim)
    return MrParams(w[0], float(b[0]), space)


def init_ranking_head(space: LabelSpace, feature_dim: int, seed: int) -> RankingHeadParams:
    w, b = _init_dense(np.random.default_rng(seed), space.size - 1, feature_dim)
    return RankingHeadParams(w, b, space)


def head_forward(features: np.ndarray, params: HeadParams) -> np.ndarray:
    """Logits over the grid: weight @ features + bias."""
    if features.shape != (params.weight.shape[1],):
        raise InvalidArgument(
            f"feature dim {features.shape} does not match head dim {params.weight.shape}"
        )
    return params.weight @ features + params.bias


def softmax(logits: np.ndarray, space: LabelSpace) -> Distribution:
    """Softmax over grid logits, with max subtraction so large inputs cannot overflow."""
    if logits.shape != (space.size,):
        raise InvalidArgument(
            f"expected {space.size} logits for this grid, got shape {logits.shape}"
        )
    if not np.all(np.isfinite(logits)):
        raise InvalidArgument("logits must be finite")
    g = np.exp(logits - logits.max())
    return Distribution(space, g / g.sum())


def expectation(dist: Distribution) -> float:
    """Mean of the grid labels under the distribution. Always inside [l_min, l_max]."""
    return float(dist.probs @ dist.space.labels)


def kl_loss(target: Distribution, pred: Distribution) -> float:
    """KL divergence sum target_k * ln(target_k / pred_k), with 0 * ln 0 = 0.

    Entries are floored at 1e-30 inside the logs only. A prediction holding
    an exact zero where the target has mass is a domain error, not a value.
    """
    if target.probs.shape != pred.probs.shape:
        raise InvalidArgument("target and prediction live on different grids")
    mask = target.probs > 0
    p = target.probs[mask]
    q = pred.probs[mask]
    if np.any(q == 0.0):
        raise NumericalDomain("prediction has zero mass where the target does not")
    return float(np.sum(p * (np.log(np.maximum(p, _LOG_FLOOR)) - np.log(np.maximum(q, _LOG_FLOOR)))))


def er_loss(y_hat: float, y: float) -> float:
    """Absolute error of the expectation against the scalar target."""
    return abs(y_hat - y)


def joint_forward(
    features: np.ndarray, params: HeadParams, y: float, config: JointLossConfig
) -> JointForward:
    """Forward pass of the joint objective.

    Encodes the target on the head's grid, runs the dense layer and softmax,
    and assembles the loss per the config. Both partial losses are recorded
    even when the config drops one from the total.
    """
    logits = head_forward(features, params)
    target = encode_distribution(y, config.sigma, params.space)
    pred = softmax(logits, params.space)
    y_hat = expectation(pred)
    dist_loss = kl_loss(target, pred)
    exp_loss = er_loss(y_hat, y)
    if not config.include_distribution_loss:
        total = config.expectation_weight * exp_loss
    elif config.expectation_weight == 0.0:
        total = dist_loss
    else:
        total = dist_loss + config.expectation_weight * exp_loss
    return JointForward(float(y), logits, target, pred, y_hat, dist_loss, exp_loss, total)


def linear_grads(d_logits: np.ndarray, features: np.ndarray, weight: np.ndarray):
    """Backprop through logits = weight @ features + bias, shared by all dense heads."""
    return np.outer(d_logits, features), d_logits.copy(), weight.T @ d_logits


def joint_backward(
    features: np.ndarray,
    params: HeadParams,
    result: JointForward,
    config: JointLossConfig,
) -> HeadGradients:
    """Closed-form gradient of the joint loss.

    d_logits = (pred - target) + w * sign(y_hat - y) * pred * (labels - y_hat),
    with the first term dropped for expectation-only configs and the second
    dropped when the weight is zero. sign(0) = 0 at the kink.
    """
    if result.logits.shape != (params.space.size,):
        raise InvalidArgument("forward cache does not match these head params")
    if features.shape != (params.weight.shape[1],):
        raise InvalidArgument("features do not match these head params")
    d_logits = np.zeros(params.space.size)
    if config.include_distribution_loss:
        d_logits += result.pred.probs - result.target.probs
    if config.expectation_weight != 0.0:
        s = np.sign(result.y_hat - result.y)
        d_logits += (
            config.expectation_weight
            * s
            * result.pred.probs
            * (params.space.labels - result.y_hat)
        )
    d_weight, d_bias, d_features = linear_grads(d_logits, features, params.weight)
    return HeadGradients(d_logits, d_weight, d_bias, d_features)


# ---------------------------------------------------------------------------
# Metric-regression ablation: one squashed output, scaled-target loss.


def mr_scale_target(y: float, space: LabelSpace) -> float:
    """Map a grid-range target into [-1, 1] to match the squashed output."""
    return 2.0 * (y - space.l_min) / space.span - 1.0


def mr_forward(features: np.ndarray, params: MrParams) -> float:
    """Squashed scalar prediction in (-1, 1)."""
    if features.shape != params.weight.shape:
        raise InvalidArgument("features do not match regression head dim")
    return float(np.tanh(params.weight @ features + params.bias))


def mr_loss(pred: float, y_scaled: float, norm: str = "l2") -> float:
    if norm == "l2":
        return (pred - y_scaled) ** 2
    if norm == "l1":
        return abs(pred - y_scaled)
    raise InvalidArgument(f"norm must be 'l1' or 'l2', got {norm!r}")


def mr_backward(
    features: np.ndarray, params: MrParams, pred: float, y_scaled: float, norm: str = "l2"
) -> MrGradients:
    if norm == "l2":
        d_out = 2.0 * (pred - y_scaled)
    elif norm == "l1":
        d_out = float(np.sign(pred - y_scaled))
    else:
        raise InvalidArgument(f"norm must be 'l1' or 'l2', got {norm!r}")
    d_pre = d_out * (1.0 - pred * pred)  # tanh' through the stored output
    return MrGradients(d_pre, d_pre * features, d_pre, d_pre * params.weight)


def mr_inference(pred: float, space: LabelSpace) -> float:
    """Invert the target scaling back to grid range."""
    return space.l_min + (pred + 1.0) * space.span / 2.0


# ---------------------------------------------------------------------------
# Per-class classification ablation: cross-entropy on the quantized target,
# expectation read-out at inference time.


def dex_class_index(y: float, space: LabelSpace) -> int:
    """Nearest grid index to y, ties resolved toward the lower index."""
    if not np.isfinite(y):
        raise InvalidArgument(f"target must be finite, got {y}")
    return int(np.argmin(np.abs(space.labels - y)))


def dex_loss(logits: np.ndarray, y: float, space: LabelSpace) -> float:
    """Cross-entropy -ln softmax(logits)[class(y)], computed in log space."""
    if logits.shape != (space.size,):
        raise InvalidArgument("logits do not match this grid")
    idx = dex_class_index(y, space)
    m = logits.max()
    return float(m + np.log(np.sum(np.exp(logits - m))) - logits[idx])


def dex_backward(
    features: np.ndarray, params: HeadParams, logits: np.ndarray, y: float
) -> HeadGradients:
    """Standard cross-entropy gradient: softmax minus the one-hot target."""
    d_logits = softmax(logits, params.space).probs.copy()
    d_logits[dex_class_index(y, params.space)] -= 1.0
    d_weight, d_bias, d_features = linear_grads(d_logits, features, params.weight)
    return HeadGradients(d_logits, d_weight, d_bias, d_features)


def dex_inference(pred: Distribution) -> float:
    """Inference uses the distribution expectation, same as the joint head."""
    return expectation(pred)


# ---------------------------------------------------------------------------
# Threshold-ranking ablation: K-1 jointly trained binary classifiers.


def ranking_forward(features: np.ndarray, params: RankingHeadParams) -> RankingForward:
    if features.shape != (params.weight.shape[1],):
        raise InvalidArgument("features do not match ranking head dim")
    z = params.weight @ features + params.bias
    return RankingForward(z, expit(z))


def ranking_loss(outputs: np.ndarray, target: RankingVector) -> float:
    """Sum of binary cross-entropies over the threshold bank."""
    t = target.values
    if outputs.shape != t.shape:
        raise InvalidArgument("outputs do not match ranking target length")
    s = outputs
    return float(
        -np.sum(
            t * np.log(np.maximum(s, _LOG_FLOOR))
            + (1.0 - t) * np.log(np.maximum(1.0 - s, _LOG_FLOOR))
        )
    )


def ranking_backward(
    features: np.ndarray,
    params: RankingHeadParams,
    fwd: RankingForward,
    target: RankingVector,
) -> RankingGradients:
    """Gradient of the summed BCE with respect to the pre-sigmoid scores: outputs - target."""
    if fwd.outputs.shape != target.values.shape:
        raise InvalidArgument("forward cache does not match ranking target")
    d_z = fwd.outputs - target.values
    d_weight, d_bias, d_features = linear_grads(d_z, features, params.weight)
    return RankingGradients(d_z, d_weight, d_bias, d_features)


def ranking_inference(outputs: np.ndarray, space: LabelSpace) -> float:
    """Count thresholds voting 'above', then read the label at that offset.

    All outputs below 0.5 lands on l_min; all above lands on l_max. The
    read-out depends only on which side of 0.5 each output falls, so any
    monotone rescaling that preserves the 0.5 crossings leaves it unchanged.
    """
    if outputs.shape != (space.size - 1,):
        raise InvalidArgument("outputs do not match this grid")
    return float(space.labels[int(np.sum(outputs > 0.5))])
