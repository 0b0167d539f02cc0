"""Feature extractors: a small fully-connected backbone and pooling utilities.

The MLP maps raw inputs to the feature vector consumed by the heads. Hidden
layers use ReLU; the final layer is linear so features are unbounded. The
pooling helpers operate on channel-first activation map stacks and exist
mainly to support the interpretability kernels: global average pooling
commutes with any dense head applied per channel.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "DenseLayer",
    "MlpParams",
    "MlpCache",
    "LayerGradients",
    "MlpGradients",
    "FeatureMap",
    "init_params",
    "mlp_forward",
    "mlp_backward",
    "global_avg_pool",
    "max_pool_2x2",
    "hybrid_pool",
]


@dataclass
class DenseLayer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)


@dataclass
class MlpParams:
    """Dense stack. dims = [input, hidden..., output]; ReLU between, linear output."""

    dims: list[int]
    layers: list[DenseLayer]


@dataclass
class MlpCache:
    """Forward intermediates needed by the backward pass."""

    params: MlpParams
    x: np.ndarray
    pre: list[np.ndarray]  # pre-activation per layer
    post: list[np.ndarray]  # post-ReLU per hidden layer; last entry equals pre[-1]


@dataclass
class LayerGradients:
    d_weight: np.ndarray
    d_bias: np.ndarray


@dataclass
class MlpGradients:
    layers: list[LayerGradients]
    d_input: np.ndarray


@dataclass
class FeatureMap:
    """Channel-first activation stack, shape (channels, height, width)."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 3:
            raise InvalidArgument(
                f"feature map must be (channels, height, width), got shape {self.values.shape}"
            )

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


def init_params(dims: list[int], seed: int) -> MlpParams:
    """Zero-mean weights scaled by sqrt(2 / fan_in), zero biases, fixed draw order."""
    if len(dims) < 2 or any(int(d) != d or d < 1 for d in dims):
        raise InvalidArgument(f"dims must be >= 2 positive integers, got {dims}")
    dims = [int(d) for d in dims]
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w = rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in)
        layers.append(DenseLayer(w, np.zeros(fan_out)))
    return MlpParams(dims, layers)


def mlp_forward(x: np.ndarray, params: MlpParams):
    """Run the stack on one input vector. Returns (features, cache)."""
    if x.shape != (params.dims[0],):
        raise InvalidArgument(f"input shape {x.shape} does not match dims {params.dims}")
    pre, post = [], []
    h = x
    last = len(params.layers) - 1
    for i, layer in enumerate(params.layers):
        z = layer.weight @ h + layer.bias
        pre.append(z)
        h = np.maximum(z, 0.0) if i < last else z
        post.append(h)
    return h, MlpCache(params, x, pre, post)


def mlp_backward(cache: MlpCache, d_features: np.ndarray) -> MlpGradients:
    """Reverse-mode pass given the loss gradient at the feature output.

    ReLU routes gradient only where the pre-activation was strictly
    positive (subgradient 0 at the kink).
    """
    params = cache.params
    if d_features.shape != (params.dims[-1],):
        raise InvalidArgument("gradient shape does not match backbone output dim")
    if len(cache.pre) != len(params.layers):
        raise InvalidArgument("cache does not match these backbone params")
    grads: list[LayerGradients] = [None] * len(params.layers)
    delta = d_features
    for i in range(len(params.layers) - 1, -1, -1):
        inp = cache.post[i - 1] if i > 0 else cache.x
        grads[i] = LayerGradients(np.outer(delta, inp), delta.copy())
        delta = params.layers[i].weight.T @ delta
        if i > 0:
            delta = delta * (cache.pre[i - 1] > 0)
    return MlpGradients(grads, delta)


def global_avg_pool(m: FeatureMap) -> np.ndarray:
    """Spatial mean per channel; constant maps collapse to their constant."""
    return m.values.mean(axis=(1, 2))


def max_pool_2x2(m: FeatureMap) -> FeatureMap:
    """2x2 max pooling with stride 2; odd trailing rows/columns are dropped."""
    c, h, w = m.values.shape
    h2, w2 = h // 2, w // 2
    if h2 < 1 or w2 < 1:
        raise InvalidArgument(f"map {h}x{w} too small for 2x2 pooling")
    v = m.values[:, : 2 * h2, : 2 * w2].reshape(c, h2, 2, w2, 2)
    return FeatureMap(v.max(axis=(2, 4)))


def hybrid_pool(m: FeatureMap) -> np.ndarray:
    """Max pooling followed by global average pooling.

    Per 2x2 block, max >= mean, so on even-sized maps this dominates
    global_avg_pool elementwise.
    """
    return global_avg_pool(max_pool_2x2(m))
