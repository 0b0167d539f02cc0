"""Model assembly, the batched training loop, and checkpoint files.

The per-sample operations in heads/backbone define the semantics; this
module trains with batch-matrix equivalents (one matmul per layer per
batch) so a full head-comparison sweep stays inside a desk-scale time
budget. Batch gradients are the arithmetic mean of per-sample gradients,
and a test pins the two routes against each other.

Checkpoints are JSON with shortest-round-trip float formatting and sorted
keys: loading restores bit-identical parameters, and rewriting an unchanged
model produces byte-identical files. No timestamps anywhere.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .backbone import DenseLayer, MlpParams, init_params
from .codec import LabelSpace, make_label_space
from .errors import InvalidArgument, NumericalDomain, ParseError
from .heads import (
    HeadParams,
    MrParams,
    RankingHeadParams,
    init_head,
    init_mr_head,
    init_ranking_head,
    mr_scale_target,
)
from .optim import adam_step, init_adam, lr_at_epoch

__all__ = [
    "HEAD_KINDS",
    "GRID_KINDS",
    "Model",
    "TrainResult",
    "build_model",
    "encode_targets",
    "batch_gradients",
    "predict_batch",
    "train_model",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_FORMAT",
]

# Heads sharing the grid-logits layout and expectation read-out.
GRID_KINDS = ("joint", "dldl", "er", "dex")
HEAD_KINDS = GRID_KINDS + ("mr_l1", "mr_l2", "ranking")

CHECKPOINT_FORMAT = "labeldist-checkpoint-v1"

# Same floor the per-sample losses use inside logarithms.
_LOG_FLOOR = 1e-30


@dataclass
class Model:
    kind: str
    backbone: MlpParams
    head: HeadParams | MrParams | RankingHeadParams
    space: LabelSpace

    @property
    def input_dim(self) -> int:
        return self.backbone.dims[0]


@dataclass
class TrainResult:
    model: Model
    history: list[dict]
    param_trajectory: list[list[np.ndarray]] | None = None


def build_model(kind: str, space: LabelSpace, backbone_dims, seed: int) -> Model:
    """Backbone from `seed`, head from `seed + 1`; dims[0] is the input width."""
    if kind not in HEAD_KINDS:
        raise InvalidArgument(f"unknown head kind {kind!r}; expected one of {HEAD_KINDS}")
    backbone = init_params(list(backbone_dims), seed)
    feature_dim = backbone.dims[-1]
    if kind in GRID_KINDS:
        head = init_head(space, feature_dim, seed + 1)
    elif kind in ("mr_l1", "mr_l2"):
        head = init_mr_head(space, feature_dim, seed + 1)
    else:
        head = init_ranking_head(space, feature_dim, seed + 1)
    return Model(kind, backbone, head, space)


def encode_targets(y: np.ndarray, sigma: float, space: LabelSpace) -> np.ndarray:
    """Row-wise twin of the per-sample distribution encoding, without range warnings."""
    z = -((space.labels[None, :] - y[:, None]) ** 2) / (2.0 * sigma * sigma)
    z -= z.max(axis=1, keepdims=True)
    g = np.exp(z)
    return g / g.sum(axis=1, keepdims=True)


def _mlp_forward_batch(X: np.ndarray, params: MlpParams):
    pres, posts = [], []
    H = X
    last = len(params.layers) - 1
    for i, layer in enumerate(params.layers):
        Z = H @ layer.weight.T + layer.bias
        pres.append(Z)
        H = np.maximum(Z, 0.0) if i < last else Z
        posts.append(H)
    return H, pres, posts


def _mlp_backward_batch(params: MlpParams, X, pres, posts, d_features):
    grads = [None] * len(params.layers)
    delta = d_features
    for i in range(len(params.layers) - 1, -1, -1):
        inp = posts[i - 1] if i > 0 else X
        grads[i] = (delta.T @ inp, delta.sum(axis=0))
        if i > 0:
            delta = (delta @ params.layers[i].weight) * (pres[i - 1] > 0)
    return grads


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    g = np.exp(logits - logits.max(axis=1, keepdims=True))
    return g / g.sum(axis=1, keepdims=True)


def trainable_arrays(model: Model) -> list[np.ndarray]:
    """Flat parameter list in a fixed order. The scalar-head bias is wrapped
    in a fresh length-1 array; the trainer keeps that wrapper and syncs the
    float back after updates."""
    arrays: list[np.ndarray] = []
    for layer in model.backbone.layers:
        arrays.append(layer.weight)
        arrays.append(layer.bias)
    head = model.head
    if isinstance(head, MrParams):
        arrays.append(head.weight)
        arrays.append(np.array([head.bias]))
    else:
        arrays.append(head.weight)
        arrays.append(head.bias)
    return arrays


def batch_gradients(
    model: Model,
    X: np.ndarray,
    y: np.ndarray,
    expectation_weight: float = 1.0,
    sigma: float = 2.0,
    mr_bias: float | None = None,
):
    """Mean loss parts and mean gradients over one batch.

    Returns (parts, grads): parts maps loss names to batch means, grads is
    aligned with trainable_arrays(model). mr_bias overrides the stored
    scalar-head bias so the trainer can feed the optimizer's live copy.
    """
    B = X.shape[0]
    labels = model.space.labels
    F, pres, posts = _mlp_forward_batch(X, model.backbone)
    head = model.head
    kind = model.kind

    if kind in GRID_KINDS:
        logits = F @ head.weight.T + head.bias
        P = _softmax_rows(logits)
        if kind == "dex":
            idx = np.argmin(np.abs(labels[None, :] - y[:, None]), axis=1)
            m = logits.max(axis=1)
            ce = m + np.log(np.sum(np.exp(logits - m[:, None]), axis=1))
            ce = ce - logits[np.arange(B), idx]
            parts = {"loss": float(ce.mean())}
            d_logits = P.copy()
            d_logits[np.arange(B), idx] -= 1.0
            d_logits /= B
        else:
            # The ablation kinds pin the loss mix themselves: dldl drops the
            # expectation term, er keeps only it (at unit weight).
            if kind == "dldl":
                expectation_weight = 0.0
            elif kind == "er":
                expectation_weight = 1.0
            T = encode_targets(y, sigma, model.space)
            if np.any((P == 0.0) & (T > 0.0)):
                raise NumericalDomain("prediction underflowed to zero where the target has mass")
            y_hat = P @ labels
            kl = np.sum(
                T * (np.log(np.maximum(T, _LOG_FLOOR)) - np.log(np.maximum(P, _LOG_FLOOR))),
                axis=1,
            )
            er = np.abs(y_hat - y)
            include_dist = kind != "er"
            dist_loss = float(kl.mean())
            exp_loss = float(er.mean())
            if not include_dist:
                total = expectation_weight * exp_loss
            elif expectation_weight == 0.0:
                total = dist_loss
            else:
                total = dist_loss + expectation_weight * exp_loss
            parts = {"loss": total, "dist_loss": dist_loss, "exp_loss": exp_loss}
            d_logits = np.zeros_like(P)
            if include_dist:
                d_logits += P - T
            if expectation_weight != 0.0:
                s = np.sign(y_hat - y)
                d_logits += expectation_weight * (s[:, None] * P * (labels[None, :] - y_hat[:, None]))
            d_logits /= B
        d_w = d_logits.T @ F
        d_b = d_logits.sum(axis=0)
        dF = d_logits @ head.weight

    elif kind in ("mr_l1", "mr_l2"):
        bias = head.bias if mr_bias is None else mr_bias
        z = F @ head.weight + bias
        pred = np.tanh(z)
        y_scaled = 2.0 * (y - model.space.l_min) / model.space.span - 1.0
        diff = pred - y_scaled
        if kind == "mr_l2":
            parts = {"loss": float(np.mean(diff * diff))}
            d_out = 2.0 * diff
        else:
            parts = {"loss": float(np.mean(np.abs(diff)))}
            d_out = np.sign(diff)
        d_pre = d_out * (1.0 - pred * pred) / B
        d_w = F.T @ d_pre
        d_b = np.array([d_pre.sum()])
        dF = d_pre[:, None] * head.weight[None, :]

    else:  # ranking
        Z = F @ head.weight.T + head.bias
        S = expit(Z)
        Tr = (y[:, None] > labels[None, :-1]).astype(float)
        # Summed binary cross-entropy per row, from the pre-sigmoid scores.
        row_loss = np.sum(np.logaddexp(0.0, Z) - Tr * Z, axis=1)
        parts = {"loss": float(row_loss.mean())}
        d_z = (S - Tr) / B
        d_w = d_z.T @ F
        d_b = d_z.sum(axis=0)
        dF = d_z @ head.weight

    backbone_grads = _mlp_backward_batch(model.backbone, X, pres, posts, dF)
    grads: list[np.ndarray] = []
    for gw, gb in backbone_grads:
        grads.append(gw)
        grads.append(gb)
    grads.append(d_w)
    grads.append(d_b)
    return parts, grads


def predict_batch(model: Model, X: np.ndarray) -> np.ndarray:
    """Deterministic predictions for a feature matrix, per the head's read-out."""
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise InvalidArgument(
            f"input shape {X.shape} does not match backbone input dim {model.input_dim}"
        )
    F, _, _ = _mlp_forward_batch(X, model.backbone)
    head = model.head
    if model.kind in GRID_KINDS:
        P = _softmax_rows(F @ head.weight.T + head.bias)
        return P @ model.space.labels
    if model.kind in ("mr_l1", "mr_l2"):
        pred = np.tanh(F @ head.weight + head.bias)
        return model.space.l_min + (pred + 1.0) * model.space.span / 2.0
    S = expit(F @ head.weight.T + head.bias)
    counts = np.sum(S > 0.5, axis=1)
    return model.space.labels[counts]


def train_model(
    train_ds,
    kind: str = "joint",
    expectation_weight: float = 1.0,
    sigma: float = 2.0,
    backbone_dims=(16, 64, 64),
    epochs: int = 60,
    batch_size: int = 64,
    base_lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
    seed: int = 0,
    test_ds=None,
    record_params: bool = False,
) -> TrainResult:
    """Full training run; deterministic given the inputs and seed.

    Seed usage: backbone init from seed, head init from seed + 1, epoch
    shuffling from seed + 2. The learning rate steps down by 10x every 30
    epochs. History rows carry per-epoch mean losses (measured as batches
    are processed) plus end-of-epoch train/test MAE.
    """
    if epochs < 1 or batch_size < 1:
        raise InvalidArgument(f"need epochs >= 1 and batch_size >= 1, got {epochs}, {batch_size}")
    if expectation_weight < 0:
        raise InvalidArgument(f"expectation_weight must be >= 0, got {expectation_weight}")
    if backbone_dims[0] != train_ds.dim:
        raise InvalidArgument(
            f"backbone input dim {backbone_dims[0]} does not match data dim {train_ds.dim}"
        )
    model = build_model(kind, train_ds.space, backbone_dims, seed)
    arrays = trainable_arrays(model)
    mr_head = isinstance(model.head, MrParams)
    state = init_adam(arrays, base_lr=base_lr, beta1=beta1, beta2=beta2, epsilon=epsilon)
    shuffle_rng = np.random.default_rng(seed + 2)

    X, y = train_ds.features, train_ds.targets
    n = len(train_ds)
    history: list[dict] = []
    trajectory = [[a.copy() for a in arrays]] if record_params else None

    for epoch in range(epochs):
        lr = lr_at_epoch(base_lr, epoch)
        perm = shuffle_rng.permutation(n)
        sums: dict[str, float] = {}
        for start in range(0, n, batch_size):
            take = perm[start : start + batch_size]
            parts, grads = batch_gradients(
                model,
                X[take],
                y[take],
                expectation_weight=expectation_weight,
                sigma=sigma,
                mr_bias=float(arrays[-1][0]) if mr_head else None,
            )
            if not np.isfinite(parts["loss"]):
                raise NumericalDomain(
                    f"non-finite loss {parts['loss']} at epoch {epoch}, batch start {start}"
                )
            for k, v in parts.items():
                sums[k] = sums.get(k, 0.0) + v * take.size
            adam_step(arrays, grads, state, lr=lr)
        if mr_head:
            model.head.bias = float(arrays[-1][0])

        row = {"epoch": epoch, "lr": lr}
        for k, v in sums.items():
            row[k] = v / n
        row["train_mae"] = float(np.mean(np.abs(predict_batch(model, X) - y)))
        if test_ds is not None:
            row["test_mae"] = float(
                np.mean(np.abs(predict_batch(model, test_ds.features) - test_ds.targets))
            )
        history.append(row)
        if record_params:
            trajectory.append([a.copy() for a in arrays])

    return TrainResult(model, history, trajectory)


def _space_dict(space: LabelSpace) -> dict:
    return {"l_min": space.l_min, "l_max": space.l_max, "step": space.step}


def save_checkpoint(path, model: Model, extra: dict | None = None) -> None:
    """Write the model as deterministic JSON. Layout documented in the README."""
    head = model.head
    if isinstance(head, MrParams):
        head_obj = {"type": "scalar", "weight": head.weight.tolist(), "bias": head.bias}
    elif isinstance(head, RankingHeadParams):
        head_obj = {"type": "threshold", "weight": head.weight.tolist(), "bias": head.bias.tolist()}
    else:
        head_obj = {"type": "grid", "weight": head.weight.tolist(), "bias": head.bias.tolist()}
    obj = {
        "format": CHECKPOINT_FORMAT,
        "kind": model.kind,
        "space": _space_dict(model.space),
        "backbone": {
            "dims": model.backbone.dims,
            "layers": [
                {"weight": layer.weight.tolist(), "bias": layer.bias.tolist()}
                for layer in model.backbone.layers
            ],
        },
        "head": head_obj,
    }
    if extra is not None:
        obj["train_config"] = extra
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_checkpoint(path) -> Model:
    """Restore a model from save_checkpoint output, validating the format tag."""
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"not valid JSON: {exc}", exc.lineno) from None
    if not isinstance(obj, dict) or obj.get("format") != CHECKPOINT_FORMAT:
        raise ParseError(f"not a {CHECKPOINT_FORMAT} file")
    space = make_label_space(**obj["space"])
    dims = [int(d) for d in obj["backbone"]["dims"]]
    layers = [
        DenseLayer(np.asarray(entry["weight"], dtype=float), np.asarray(entry["bias"], dtype=float))
        for entry in obj["backbone"]["layers"]
    ]
    backbone = MlpParams(dims, layers)
    h = obj["head"]
    if h["type"] == "scalar":
        head = MrParams(np.asarray(h["weight"], dtype=float), float(h["bias"]), space)
    elif h["type"] == "threshold":
        head = RankingHeadParams(
            np.asarray(h["weight"], dtype=float), np.asarray(h["bias"], dtype=float), space
        )
    elif h["type"] == "grid":
        head = HeadParams(
            np.asarray(h["weight"], dtype=float), np.asarray(h["bias"], dtype=float), space
        )
    else:
        raise ParseError(f"unknown head type {h['type']!r}")
    kind = obj["kind"]
    if kind not in HEAD_KINDS:
        raise ParseError(f"unknown head kind {kind!r}")
    return Model(kind, backbone, head, space)
