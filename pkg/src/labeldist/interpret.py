"""Interpretability kernels: class activation maps and occlusion sweeps.

Both kernels are backbone-agnostic. Activation maps come from whatever
produced the channel stack; the occlusion sweep only needs a callable that
maps a batch of input grids to scalar predictions. Because global average
pooling and the dense head are both linear, pooling the activation maps
reproduces the head's logits exactly; that identity is pinned by tests.
"""

from dataclasses import dataclass

import numpy as np

from .backbone import FeatureMap
from .codec import Distribution
from .errors import DegenerateBaseline, InvalidArgument
from .heads import HeadParams

__all__ = [
    "ScoreMap",
    "OcclusionGrid",
    "class_activation_maps",
    "score_map",
    "occlusion_sensitivity",
]


@dataclass
class ScoreMap:
    """Prediction-weighted mixture of class activation maps, shape (height, width)."""

    values: np.ndarray


@dataclass
class OcclusionGrid:
    """Relative MAE degradation per mask position, shape (rows, cols)."""

    mask_shape: tuple[int, int]
    stride: int
    relative_loss: np.ndarray


def class_activation_maps(maps: FeatureMap, params: HeadParams) -> np.ndarray:
    """Per-class maps A[k] = sum_j weight[k, j] * maps[j] + bias[k].

    Returns a (K, height, width) stack. The channel count must match the
    head's feature dimension.
    """
    if maps.channels != params.weight.shape[1]:
        raise InvalidArgument(
            f"head expects {params.weight.shape[1]} channels, maps have {maps.channels}"
        )
    stack = np.tensordot(params.weight, maps.values, axes=([1], [0]))
    return stack + params.bias[:, None, None]


def score_map(activation_maps: np.ndarray, pred: Distribution) -> ScoreMap:
    """Mix the per-class maps by the predicted probabilities."""
    if activation_maps.ndim != 3 or activation_maps.shape[0] != pred.probs.shape[0]:
        raise InvalidArgument(
            f"need one activation map per class: {activation_maps.shape} vs {pred.probs.shape}"
        )
    return ScoreMap(np.tensordot(pred.probs, activation_maps, axes=([0], [0])))


def occlusion_sensitivity(
    evaluate,
    inputs: np.ndarray,
    targets: np.ndarray,
    mask_shape: tuple[int, int],
    stride: int,
    fill: np.ndarray,
) -> OcclusionGrid:
    """Slide a fill-valued mask over every input and measure MAE degradation.

    evaluate maps an (n, height, width) batch to n scalar predictions. For
    each mask position the masked region of every input is replaced by the
    corresponding cells of `fill` (typically a training-set mean image),
    and relative_loss = (mae_masked - mae_clean) / mae_clean is recorded.
    A clean MAE of zero leaves the relative measure undefined.
    """
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if inputs.ndim != 3:
        raise InvalidArgument(f"inputs must be (n, height, width), got {inputs.shape}")
    if targets.shape != (inputs.shape[0],):
        raise InvalidArgument("need one target per input grid")
    n, h, w = inputs.shape
    mh, mw = int(mask_shape[0]), int(mask_shape[1])
    if stride < 1:
        raise InvalidArgument(f"stride must be >= 1, got {stride}")
    if not (1 <= mh <= h and 1 <= mw <= w):
        raise InvalidArgument(f"mask {mh}x{mw} does not fit inside {h}x{w} inputs")
    fill = np.asarray(fill, dtype=float)
    if fill.shape != (h, w):
        raise InvalidArgument(f"fill must match the input grid {h}x{w}, got {fill.shape}")

    clean = np.abs(np.asarray(evaluate(inputs), dtype=float) - targets).mean()
    if clean == 0.0:
        raise DegenerateBaseline("clean MAE is zero; relative degradation is undefined")

    rows = (h - mh) // stride + 1
    cols = (w - mw) // stride + 1
    relative = np.empty((rows, cols))
    for r in range(rows):
        r0 = r * stride
        for c in range(cols):
            c0 = c * stride
            masked = inputs.copy()
            masked[:, r0 : r0 + mh, c0 : c0 + mw] = fill[r0 : r0 + mh, c0 : c0 + mw]
            masked_mae = np.abs(np.asarray(evaluate(masked), dtype=float) - targets).mean()
            relative[r, c] = (masked_mae - clean) / clean
    return OcclusionGrid((mh, mw), int(stride), relative)
