"""Command-line interface.

Subcommands: encode, train, eval, compare, gradcheck, interpret. Runs are
driven by a JSON config file whose fields mirror RunConfig; individual
flags override file values. Exit codes: 0 on success, 1 for validation or
parse errors, 2 for numerical failures.

All outputs are deterministic given config and seed. The only timestamp
ever written is the single header comment line of the training log.
"""

import argparse
import csv
import json
import statistics
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .codec import (
    LabelSpace,
    encode_cdf,
    encode_distribution,
    encode_ranking,
    make_label_space,
    ranking_from_distribution,
)
from .data import Dataset, SynthConfig, gen_synthetic, load_csv, save_predictions, split
from .errors import InvalidArgument, NumericalDomain, ParseError
from .gradcheck import run_suite, suite_worst
from .heads import HeadParams
from .interpret import class_activation_maps, occlusion_sensitivity, score_map
from .metrics import evaluate
from .backbone import FeatureMap, global_avg_pool
from .heads import head_forward, softmax
from .train import (
    HEAD_KINDS,
    load_checkpoint,
    predict_batch,
    save_checkpoint,
    train_model,
)

__all__ = [
    "RunConfig",
    "cmd_encode",
    "cmd_train",
    "cmd_eval",
    "cmd_compare",
    "cmd_gradcheck",
    "cmd_interpret",
    "main",
]

_INT_FIELDS = {"epochs", "batch_size", "seed", "n", "dim"}
_FLOAT_FIELDS = {
    "expectation_weight",
    "sigma",
    "l_min",
    "l_max",
    "step",
    "base_lr",
    "beta1",
    "beta2",
    "epsilon",
    "train_fraction",
    "noise_std",
    "label_sigma",
}
_INT_LIST_FIELDS = {"backbone_dims", "seeds"}


@dataclass
class RunConfig:
    """Everything a run needs; serializes to flat JSON and back unchanged."""

    head: str = "joint"
    expectation_weight: float = 1.0
    sigma: float = 2.0
    l_min: float = 0.0
    l_max: float = 100.0
    step: float = 1.0
    backbone_dims: list[int] = field(default_factory=lambda: [16, 64, 64])
    epochs: int = 60
    batch_size: int = 64
    base_lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    train_fraction: float = 0.8
    seed: int = 0
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    n: int = 2000
    dim: int = 16
    noise_std: float = 0.05
    curve: str = "sin"
    label_sigma: float = 2.0
    csv: str | None = None

    def __post_init__(self):
        if self.head not in HEAD_KINDS:
            raise InvalidArgument(f"unknown head {self.head!r}; expected one of {HEAD_KINDS}")
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidArgument(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidArgument("epochs and batch_size must be >= 1")
        if self.base_lr <= 0 or self.sigma <= 0:
            raise InvalidArgument("base_lr and sigma must be positive")
        if self.expectation_weight < 0:
            raise InvalidArgument("expectation_weight must be >= 0")
        if len(self.backbone_dims) < 2:
            raise InvalidArgument(f"backbone_dims needs >= 2 entries, got {self.backbone_dims}")
        if not self.seeds:
            raise InvalidArgument("seeds must not be empty")

    def space(self) -> LabelSpace:
        return make_label_space(self.l_min, self.l_max, self.step)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in d.items():
            if key not in known:
                raise InvalidArgument(f"unknown config field {key!r}")
            if value is None:
                kwargs[key] = None
                continue
            try:
                if key in _INT_FIELDS:
                    value = int(value)
                elif key in _FLOAT_FIELDS:
                    value = float(value)
                elif key in _INT_LIST_FIELDS:
                    value = [int(v) for v in value]
            except (TypeError, ValueError):
                raise InvalidArgument(f"config field {key!r}: bad value {value!r}") from None
            kwargs[key] = value
        return cls(**kwargs)

    def dataset(self, seed: int | None = None) -> Dataset:
        """Full dataset for one run. The seed (default: config seed) drives
        generation for synthetic data; CSV data ignores it here and uses it
        only for splitting."""
        space = self.space()
        if self.csv is not None:
            return load_csv(self.csv, space)
        run_seed = self.seed if seed is None else seed
        synth = SynthConfig(
            n=self.n,
            dim=self.dim,
            noise_std=self.noise_std,
            curve=self.curve,
            label_sigma=self.label_sigma,
            seed=run_seed,
        )
        return gen_synthetic(synth, space)


def _load_config(args) -> RunConfig:
    base: dict = {}
    path = getattr(args, "config", None)
    if path:
        try:
            with open(path) as fh:
                base = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}", exc.lineno) from None
        if not isinstance(base, dict):
            raise ParseError(f"{path}: config must be a JSON object")
    for name in (
        "head",
        "expectation_weight",
        "sigma",
        "epochs",
        "batch_size",
        "base_lr",
        "train_fraction",
        "seed",
        "n",
        "dim",
        "noise_std",
        "label_sigma",
        "l_min",
        "l_max",
        "step",
        "csv",
    ):
        value = getattr(args, name, None)
        if value is not None:
            base[name] = value
    for name in ("backbone_dims", "seeds"):
        value = getattr(args, name, None)
        if value is not None:
            base[name] = [int(v) for v in str(value).split(",") if v != ""]
    return RunConfig.from_dict(base)


def _write_json(path: Path, obj: dict) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _train_one(config: RunConfig, seed: int):
    """Generate, split, and train for one seed. Returns (result, train, test)."""
    ds = config.dataset(seed)
    train_ds, test_ds = split(ds, config.train_fraction, seed)
    result = train_model(
        train_ds,
        kind=config.head,
        expectation_weight=config.expectation_weight,
        sigma=config.sigma,
        backbone_dims=config.backbone_dims,
        epochs=config.epochs,
        batch_size=config.batch_size,
        base_lr=config.base_lr,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.epsilon,
        seed=seed,
        test_ds=test_ds,
    )
    return result, train_ds, test_ds


_LOG_COLUMNS = ["epoch", "lr", "loss", "dist_loss", "exp_loss", "train_mae", "test_mae"]


def _write_train_log(path: Path, history: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# started {time.strftime('%Y-%m-%dT%H:%M:%S')}\n")
        writer = csv.writer(fh)
        writer.writerow(_LOG_COLUMNS)
        for row in history:
            out = []
            for col in _LOG_COLUMNS:
                if col == "epoch":
                    out.append(row["epoch"])
                elif col in row:
                    out.append(repr(float(row[col])))
                else:
                    out.append("")
            writer.writerow(out)


def cmd_encode(args) -> int:
    space = make_label_space(args.l_min, args.l_max, args.step)
    dist = encode_distribution(args.y, args.sigma, space)
    cdf = encode_cdf(args.y, args.sigma, space)
    rank = encode_ranking(args.y, space)
    approx = ranking_from_distribution(dist)
    deviation = float(np.max(np.abs(rank.values - approx.values)))

    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["label", "pdf", "cdf", "ranking", "ranking_approx"])
        for i in range(space.size):
            row = [repr(float(space.labels[i])), repr(float(dist.probs[i])), repr(float(cdf.values[i]))]
            if i < space.size - 1:
                row += [repr(float(rank.values[i])), repr(float(approx.values[i]))]
            else:
                row += ["", ""]
            writer.writerow(row)
        out.write(f"# max |ranking - ranking_approx| = {deviation!r}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_train(args) -> int:
    config = _load_config(args)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result, train_ds, test_ds = _train_one(config, config.seed)

    save_checkpoint(out_dir / "checkpoint.json", result.model, extra=config.to_dict())
    _write_train_log(out_dir / "train_log.csv", result.history)

    train_report = evaluate(
        predict_batch(result.model, train_ds.features), train_ds.targets, train_ds.sigmas
    )
    test_report = evaluate(
        predict_batch(result.model, test_ds.features), test_ds.targets, test_ds.sigmas
    )
    report = {
        "config": config.to_dict(),
        "train": train_report.to_dict(),
        "test": test_report.to_dict(),
    }
    _write_json(out_dir / "train_report.json", report)
    print(
        f"trained {config.head} for {config.epochs} epochs: "
        f"train mae {train_report.mae:.4f}, test mae {test_report.mae:.4f}"
    )
    print(f"wrote {out_dir / 'checkpoint.json'}")
    return 0


def _eval_dataset(config: RunConfig, which: str) -> Dataset:
    ds = config.dataset(config.seed)
    if which == "all":
        return ds
    train_ds, test_ds = split(ds, config.train_fraction, config.seed)
    return train_ds if which == "train" else test_ds


def cmd_eval(args) -> int:
    config = _load_config(args)
    model = load_checkpoint(args.checkpoint)
    ds = _eval_dataset(config, args.split)
    preds = predict_batch(model, ds.features)
    report = evaluate(preds, ds.targets, ds.sigmas)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    obj = {"config": config.to_dict(), "split": args.split, "report": report.to_dict()}
    _write_json(out_dir / "eval_report.json", obj)
    save_predictions(out_dir / "predictions.csv", ds.targets, preds)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


_COMPARE_COLUMNS = [
    "head",
    "n_seeds",
    "mae_median",
    "mae_spread",
    "rmse_median",
    "rmse_spread",
    "pearson_median",
    "pearson_spread",
    "epsilon_median",
    "epsilon_spread",
]


def cmd_compare(args) -> int:
    config = _load_config(args)
    heads = [h.strip() for h in args.heads.split(",") if h.strip()]
    for h in heads:
        if h not in HEAD_KINDS:
            raise InvalidArgument(f"unknown head {h!r} in --heads")
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    detail: dict[str, list[dict]] = {}
    for head in heads:
        head_config = RunConfig.from_dict({**config.to_dict(), "head": head})
        reports = []
        for seed in config.seeds:
            result, _, test_ds = _train_one(head_config, seed)
            preds = predict_batch(result.model, test_ds.features)
            reports.append(evaluate(preds, test_ds.targets, test_ds.sigmas))
        detail[head] = [r.to_dict() for r in reports]
        row: dict = {"head": head, "n_seeds": len(reports)}
        for name in ("mae", "rmse", "pearson", "epsilon_error"):
            values = [getattr(r, name) for r in reports]
            short = "epsilon" if name == "epsilon_error" else name
            if any(v is None for v in values):
                row[f"{short}_median"] = None
                row[f"{short}_spread"] = None
            else:
                row[f"{short}_median"] = float(statistics.median(values))
                row[f"{short}_spread"] = float(max(values) - min(values))
        rows.append(row)

    with open(out_dir / "compare.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_COMPARE_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row[c] if c in ("head", "n_seeds") else ("" if row[c] is None else repr(row[c]))
                    for c in _COMPARE_COLUMNS
                ]
            )
    _write_json(out_dir / "compare.json", {"config": config.to_dict(), "rows": rows, "reports": detail})
    for row in rows:
        print(f"{row['head']}: median test mae {row['mae_median']:.4f} (spread {row['mae_spread']:.4f})")
    return 0


def cmd_gradcheck(args) -> int:
    heads = tuple(h.strip() for h in args.heads.split(",") if h.strip())
    results = run_suite(
        n_configs=args.configs, base_seed=args.seed, tolerance=args.tolerance, heads_to_check=heads
    )
    worst = suite_worst(results)
    failed = False
    for name in heads:
        status = "PASS" if worst[name] < args.tolerance else "FAIL"
        failed = failed or status == "FAIL"
        print(
            f"gradcheck {name}: configs={len(results[name])} "
            f"worst={worst[name]:.3e} tol={args.tolerance:.0e} {status}"
        )
    return 2 if failed else 0


def _load_matrix(path) -> np.ndarray:
    try:
        m = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not np.all(np.isfinite(m)):
        raise ParseError(f"{path}: non-finite values")
    return m


def cmd_interpret(args) -> int:
    model = load_checkpoint(args.checkpoint)
    out_path = Path(args.output)
    if args.mode == "scoremap":
        if not isinstance(model.head, HeadParams):
            raise InvalidArgument("scoremap needs a grid-logits head checkpoint")
        if not args.maps:
            raise InvalidArgument("scoremap needs --maps with one CSV matrix per channel")
        channels = [_load_matrix(p) for p in args.maps]
        shapes = {m.shape for m in channels}
        if len(shapes) != 1:
            raise InvalidArgument(f"channel maps disagree on shape: {sorted(shapes)}")
        maps = FeatureMap(np.stack(channels))
        pooled = global_avg_pool(maps)
        pred = softmax(head_forward(pooled, model.head), model.space)
        cams = class_activation_maps(maps, model.head)
        smap = score_map(cams, pred)
        np.savetxt(out_path, smap.values, delimiter=",")
        print(f"scoremap {smap.values.shape[0]}x{smap.values.shape[1]} -> {out_path}")
        return 0

    # occlusion
    config = _load_config(args)
    if config.csv is None:
        raise InvalidArgument("occlusion needs --csv grid data (one flattened grid per row)")
    grid_h, grid_w = args.grid_shape
    ds = load_csv(config.csv, model.space)
    if ds.dim != grid_h * grid_w:
        raise InvalidArgument(
            f"csv rows have {ds.dim} cells but --grid-shape implies {grid_h * grid_w}"
        )
    grids = ds.features.reshape(len(ds), grid_h, grid_w)
    fill = grids.mean(axis=0)

    def evaluate_grids(batch):
        return predict_batch(model, batch.reshape(batch.shape[0], -1))

    grid = occlusion_sensitivity(
        evaluate_grids, grids, ds.targets, tuple(args.mask_shape), args.stride, fill
    )
    np.savetxt(out_path, grid.relative_loss, delimiter=",")
    r, c = np.unravel_index(np.argmax(grid.relative_loss), grid.relative_loss.shape)
    print(
        f"occlusion {grid.relative_loss.shape[0]}x{grid.relative_loss.shape[1]} -> {out_path}; "
        f"most sensitive position ({r}, {c})"
    )
    return 0


class _CliUsage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # Validation problems must exit 1, not argparse's default 2.
    def error(self, message):
        raise _CliUsage(f"{self.prog}: {message}")


def _add_config_options(p: _Parser, with_seeds: bool = False) -> None:
    p.add_argument("--config", help="JSON config file (RunConfig fields)")
    p.add_argument("--head", choices=HEAD_KINDS)
    p.add_argument("--expectation-weight", dest="expectation_weight", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--base-lr", dest="base_lr", type=float)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--noise-std", dest="noise_std", type=float)
    p.add_argument("--label-sigma", dest="label_sigma", type=float)
    p.add_argument("--l-min", dest="l_min", type=float)
    p.add_argument("--l-max", dest="l_max", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--csv", help="train/eval on this CSV instead of synthetic data")
    p.add_argument("--backbone-dims", dest="backbone_dims", help="comma-separated, e.g. 16,64,64")
    if with_seeds:
        p.add_argument("--seeds", help="comma-separated seed list for multi-seed runs")


def build_parser() -> _Parser:
    parser = _Parser(prog="labeldist", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("encode", parents=[], help="print all encodings of one target")
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--l-min", dest="l_min", type=float, default=0.0)
    p.add_argument("--l-max", dest="l_max", type=float, default=100.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--output", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("train", help="train one model and write checkpoint/log/report")
    _add_config_options(p)
    p.add_argument("--output-dir", dest="output_dir", default="runs/train")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    _add_config_options(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=["all", "train", "test"], default="all")
    p.add_argument("--output-dir", dest="output_dir", default="runs/eval")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="train head variants across seeds and tabulate")
    _add_config_options(p, with_seeds=True)
    p.add_argument("--heads", default=",".join(HEAD_KINDS))
    p.add_argument("--output-dir", dest="output_dir", default="runs/compare")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gradcheck", help="finite-difference check of all analytic gradients")
    p.add_argument("--configs", type=int, default=100)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--heads", default="joint,mr,dex,ranking")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("interpret", help="score maps and occlusion sensitivity")
    p.add_argument("--mode", choices=["scoremap", "occlusion"], required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--maps", nargs="*", help="scoremap: one CSV matrix per channel")
    p.add_argument("--config", help="occlusion: JSON config naming the csv data")
    p.add_argument("--csv", help="occlusion: grid dataset, one flattened grid per row")
    p.add_argument("--grid-shape", dest="grid_shape", type=int, nargs=2, default=[224, 224])
    p.add_argument("--mask-shape", dest="mask_shape", type=int, nargs=2, default=[32, 32])
    p.add_argument("--stride", type=int, default=32)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_interpret)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help()
            return 1
        return args.func(args)
    except _CliUsage as exc:
        print(exc, file=sys.stderr)
        return 1
    except (InvalidArgument, ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalDomain as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
