"""Finite-difference validation of every analytic gradient in the package.

Central differences with a fixed step are the oracle; the analytic side is
whatever the backward functions return. Deviations are scaled per gradient
array by the largest finite-difference magnitude in that array, because
individual components can pass arbitrarily close to zero (wherever the
predicted and target distributions cross), which makes bare per-component
relative error ill-posed at finite-difference noise levels. A wrong sign or
a dropped term still shows up at order one under this scaling.

Checked points are kept away from the non-differentiable spots: the
absolute-error kink (|expectation - target| must exceed 1e-3) and its
scaled-target twin for the squashed regression head.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .backbone import init_params, mlp_backward, mlp_forward
from .codec import encode_distribution, encode_ranking, make_label_space
from .errors import InvalidArgument
from .heads import (
    HeadParams,
    JointLossConfig,
    MrParams,
    RankingHeadParams,
    dex_backward,
    dex_loss,
    er_loss,
    expectation,
    head_forward,
    init_head,
    init_mr_head,
    init_ranking_head,
    joint_backward,
    joint_forward,
    kl_loss,
    mr_backward,
    mr_forward,
    mr_loss,
    mr_scale_target,
    ranking_backward,
    ranking_forward,
    ranking_loss,
    softmax,
)

__all__ = [
    "CheckResult",
    "fd_gradient",
    "scaled_deviation",
    "check_joint_head",
    "check_mr_head",
    "check_dex_head",
    "check_ranking_head",
    "check_end_to_end",
    "run_suite",
    "DEFAULT_H",
    "DEFAULT_TOLERANCE",
]

DEFAULT_H = 1e-6
DEFAULT_TOLERANCE = 1e-6

# Keep sampled points off the absolute-error kink.
_KINK_MARGIN = 1e-3


@dataclass
class CheckResult:
    name: str
    errors: dict[str, float]

    @property
    def worst(self) -> float:
        return max(self.errors.values())

    def __str__(self) -> str:
        detail = ", ".join(f"{k}={v:.2e}" for k, v in self.errors.items())
        return f"{self.name}: worst={self.worst:.2e} ({detail})"


def fd_gradient(f, arr: np.ndarray, h: float = DEFAULT_H) -> np.ndarray:
    """Central finite differences of scalar f() with respect to arr, in place.

    arr is perturbed one coordinate at a time and restored exactly; f takes
    no arguments and must read arr by reference.
    """
    g = np.empty_like(arr, dtype=float)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + h
        f_plus = f()
        arr[idx] = orig - h
        f_minus = f()
        arr[idx] = orig
        g[idx] = (f_plus - f_minus) / (2.0 * h)
    return g


def scaled_deviation(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |analytic - numeric|, scaled by the largest finite-difference magnitude."""
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    if analytic.shape != numeric.shape:
        raise InvalidArgument("gradient shapes differ")
    scale = max(float(np.max(np.abs(numeric))), 1e-8)
    return float(np.max(np.abs(analytic - numeric))) / scale


def _default_space(grid_points: int):
    return make_label_space(0.0, float(grid_points - 1), 1.0)


def _draw_target(rng, space, y_hat: float) -> float:
    # Any draw works except one landing on the kink; redraw until clear.
    for _ in range(100):
        y = float(rng.uniform(space.l_min, space.l_max))
        if abs(y_hat - y) > _KINK_MARGIN:
            return y
    raise RuntimeError("could not find a target away from the kink")


def check_joint_head(
    seed: int,
    feature_dim: int = 16,
    grid_points: int = 101,
    weight: float = 1.0,
    include_distribution_loss: bool = True,
    h: float = DEFAULT_H,
    backbone_dims: tuple[int, ...] | None = (5, 7),
    backward_fn=joint_backward,
) -> CheckResult:
    """Check the joint head gradients, optionally chained through a small backbone.

    backbone_dims gives the hidden stack in front of the head; its output is
    forced to feature_dim. None checks the head in isolation.
    """
    rng = np.random.default_rng(seed)
    space = _default_space(grid_points)
    params = init_head(space, feature_dim, seed)
    # Nonzero biases so their gradient block is exercised at a generic point.
    params.bias += rng.standard_normal(space.size) * 0.1
    config = JointLossConfig(
        expectation_weight=weight,
        sigma=2.0,
        include_distribution_loss=include_distribution_loss,
    )

    if backbone_dims is None:
        features = rng.standard_normal(feature_dim)
        mlp = None
    else:
        dims = [int(d) for d in backbone_dims] + [feature_dim]
        mlp = init_params(dims, seed + 1)
        for layer in mlp.layers:
            layer.bias += rng.standard_normal(layer.bias.shape) * 0.1
        x = rng.standard_normal(dims[0])
        features, _ = mlp_forward(x, mlp)

    fwd = joint_forward(features, params, 0.0, config)
    y = _draw_target(rng, space, fwd.y_hat)
    target = encode_distribution(y, config.sigma, space)

    def loss_from_logits():
        pred = softmax(logit_buf, space)
        e = er_loss(expectation(pred), y)
        if not config.include_distribution_loss:
            return config.expectation_weight * e
        total = kl_loss(target, pred)
        if config.expectation_weight != 0.0:
            total += config.expectation_weight * e
        return total

    def loss_from_head():
        logits = head_forward(feat_buf, params)
        pred = softmax(logits, space)
        e = er_loss(expectation(pred), y)
        if not config.include_distribution_loss:
            return config.expectation_weight * e
        total = kl_loss(target, pred)
        if config.expectation_weight != 0.0:
            total += config.expectation_weight * e
        return total

    fwd = joint_forward(features, params, y, config)
    grads = backward_fn(features, params, fwd, config)

    errors: dict[str, float] = {}
    logit_buf = fwd.logits.copy()
    errors["d_logits"] = scaled_deviation(grads.d_logits, fd_gradient(loss_from_logits, logit_buf, h))
    feat_buf = features.copy()
    errors["d_weight"] = scaled_deviation(grads.d_weight, fd_gradient(loss_from_head, params.weight, h))
    errors["d_bias"] = scaled_deviation(grads.d_bias, fd_gradient(loss_from_head, params.bias, h))
    errors["d_features"] = scaled_deviation(grads.d_features, fd_gradient(loss_from_head, feat_buf, h))

    if mlp is not None:
        x_buf = x.copy()

        def loss_through_backbone():
            f, _ = mlp_forward(x_buf, mlp)
            logits = params.weight @ f + params.bias
            pred = softmax(logits, space)
            e = er_loss(expectation(pred), y)
            if not config.include_distribution_loss:
                return config.expectation_weight * e
            total = kl_loss(target, pred)
            if config.expectation_weight != 0.0:
                total += config.expectation_weight * e
            return total

        f, cache = mlp_forward(x, mlp)
        fwd2 = joint_forward(f, params, y, config)
        head_grads = backward_fn(f, params, fwd2, config)
        mlp_grads = mlp_backward(cache, head_grads.d_features)
        for i, lg in enumerate(mlp_grads.layers):
            errors[f"backbone_w{i}"] = scaled_deviation(
                lg.d_weight, fd_gradient(loss_through_backbone, mlp.layers[i].weight, h)
            )
            errors[f"backbone_b{i}"] = scaled_deviation(
                lg.d_bias, fd_gradient(loss_through_backbone, mlp.layers[i].bias, h)
            )
        errors["backbone_input"] = scaled_deviation(
            mlp_grads.d_input, fd_gradient(loss_through_backbone, x_buf, h)
        )

    return CheckResult(
        f"joint(d={feature_dim},K={grid_points},w={weight},dist={include_distribution_loss})",
        errors,
    )


def check_mr_head(
    seed: int, feature_dim: int = 16, norm: str = "l2", h: float = DEFAULT_H
) -> CheckResult:
    rng = np.random.default_rng(seed)
    space = _default_space(101)
    params = init_mr_head(space, feature_dim, seed)
    params.bias = float(rng.standard_normal() * 0.1)
    features = rng.standard_normal(feature_dim) * 0.5
    pred = mr_forward(features, params)
    for _ in range(100):
        y_scaled = mr_scale_target(float(rng.uniform(space.l_min, space.l_max)), space)
        if abs(pred - y_scaled) > _KINK_MARGIN:
            break

    feat_buf = features.copy()
    w_buf = params.weight

    def loss_from_head():
        return mr_loss(mr_forward(feat_buf, params), y_scaled, norm)

    grads = mr_backward(features, params, pred, y_scaled, norm)
    errors = {
        "d_weight": scaled_deviation(grads.d_weight, fd_gradient(loss_from_head, w_buf, h)),
        "d_features": scaled_deviation(grads.d_features, fd_gradient(loss_from_head, feat_buf, h)),
    }
    bias_arr = np.array([params.bias])

    def loss_from_bias():
        p = MrParams(params.weight, float(bias_arr[0]), space)
        return mr_loss(mr_forward(features, p), y_scaled, norm)

    errors["d_bias"] = scaled_deviation(
        np.array([grads.d_bias]), fd_gradient(loss_from_bias, bias_arr, h)
    )
    return CheckResult(f"mr_{norm}(d={feature_dim})", errors)


def check_dex_head(
    seed: int, feature_dim: int = 16, grid_points: int = 101, h: float = DEFAULT_H
) -> CheckResult:
    rng = np.random.default_rng(seed)
    space = _default_space(grid_points)
    params = init_head(space, feature_dim, seed)
    params.bias += rng.standard_normal(space.size) * 0.1
    features = rng.standard_normal(feature_dim)
    y = float(rng.uniform(space.l_min, space.l_max))
    logits = head_forward(features, params)
    grads = dex_backward(features, params, logits, y)

    logit_buf = logits.copy()
    feat_buf = features.copy()

    def loss_from_logits():
        return dex_loss(logit_buf, y, space)

    def loss_from_head():
        return dex_loss(head_forward(feat_buf, params), y, space)

    errors = {
        "d_logits": scaled_deviation(grads.d_logits, fd_gradient(loss_from_logits, logit_buf, h)),
        "d_weight": scaled_deviation(grads.d_weight, fd_gradient(loss_from_head, params.weight, h)),
        "d_bias": scaled_deviation(grads.d_bias, fd_gradient(loss_from_head, params.bias, h)),
        "d_features": scaled_deviation(grads.d_features, fd_gradient(loss_from_head, feat_buf, h)),
    }
    return CheckResult(f"dex(d={feature_dim},K={grid_points})", errors)


def check_ranking_head(
    seed: int, feature_dim: int = 16, grid_points: int = 101, h: float = DEFAULT_H
) -> CheckResult:
    rng = np.random.default_rng(seed)
    space = _default_space(grid_points)
    params = init_ranking_head(space, feature_dim, seed)
    params.bias += rng.standard_normal(space.size - 1) * 0.1
    features = rng.standard_normal(feature_dim)
    target = encode_ranking(float(rng.uniform(space.l_min, space.l_max)), space)

    fwd = ranking_forward(features, params)
    grads = ranking_backward(features, params, fwd, target)

    z_buf = fwd.z.copy()
    feat_buf = features.copy()

    def loss_from_z():
        return ranking_loss(expit(z_buf), target)

    def loss_from_head():
        return ranking_loss(ranking_forward(feat_buf, params).outputs, target)

    errors = {
        "d_z": scaled_deviation(grads.d_z, fd_gradient(loss_from_z, z_buf, h)),
        "d_weight": scaled_deviation(grads.d_weight, fd_gradient(loss_from_head, params.weight, h)),
        "d_bias": scaled_deviation(grads.d_bias, fd_gradient(loss_from_head, params.bias, h)),
        "d_features": scaled_deviation(grads.d_features, fd_gradient(loss_from_head, feat_buf, h)),
    }
    return CheckResult(f"ranking(d={feature_dim},K={grid_points})", errors)


def check_end_to_end(
    seed: int,
    dims: tuple[int, ...] = (5, 7, 16),
    grid_points: int = 51,
    weight: float = 1.0,
    h: float = DEFAULT_H,
) -> CheckResult:
    """Full-chain check: every backbone and head parameter of a joint model."""
    result = check_joint_head(
        seed,
        feature_dim=int(dims[-1]),
        grid_points=grid_points,
        weight=weight,
        h=h,
        backbone_dims=tuple(int(d) for d in dims[:-1]),
    )
    return CheckResult(f"end_to_end(dims={tuple(dims)},K={grid_points})", result.errors)


def run_suite(
    n_configs: int = 100,
    base_seed: int = 0,
    h: float = DEFAULT_H,
    tolerance: float = DEFAULT_TOLERANCE,
    heads_to_check: tuple[str, ...] = ("joint", "mr", "dex", "ranking"),
) -> dict[str, list[CheckResult]]:
    """Sweep random configurations over every head family.

    Configurations cycle through feature dims {4, 16}, grid sizes {11, 101},
    and expectation weights {0, 0.01, 1, 10}; the seed varies per index so
    features, parameters, and targets differ every time.
    """
    dims = (4, 16)
    grids = (11, 101)
    weights = (0.0, 0.01, 1.0, 10.0)
    results: dict[str, list[CheckResult]] = {name: [] for name in heads_to_check}
    for i in range(n_configs):
        d = dims[i % 2]
        k = grids[(i // 2) % 2]
        w = weights[(i // 4) % 4]
        seed = base_seed + 1000 * i
        if "joint" in results:
            results["joint"].append(
                check_joint_head(seed, feature_dim=d, grid_points=k, weight=w, h=h)
            )
        if "mr" in results:
            results["mr"].append(
                check_mr_head(seed, feature_dim=d, norm="l1" if i % 2 else "l2", h=h)
            )
        if "dex" in results:
            results["dex"].append(check_dex_head(seed, feature_dim=d, grid_points=k, h=h))
        if "ranking" in results:
            results["ranking"].append(
                check_ranking_head(seed, feature_dim=d, grid_points=k, h=h)
            )
    return results


def suite_worst(results: dict[str, list[CheckResult]]) -> dict[str, float]:
    return {name: max(r.worst for r in rs) for name, rs in results.items() if rs}
