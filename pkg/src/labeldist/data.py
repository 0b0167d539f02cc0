"""Synthetic benchmark data and flat-file interchange.

The generator draws a latent scalar uniformly over the label grid range and
embeds it through a bank of random sinusoids, so the inverse problem is
smooth, nonlinear, and solvable at desk scale. Feature noise is additive
Gaussian. Everything is deterministic given the config seed, with a fixed
draw order: frequencies, phases, latents, then noise.

CSV contract: header "f0,...,f{d-1},y" with an optional trailing "sigma"
column; one sample per row. Predictions are written as "index,y_true,y_pred".
Floats are serialized with shortest round-trip formatting, so files reload
to exactly the values that were written.
"""

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .codec import LabelSpace
from .errors import DegenerateInput, InvalidArgument, OutOfRangeTarget, ParseError

__all__ = [
    "Sample",
    "SynthConfig",
    "Dataset",
    "gen_synthetic",
    "load_csv",
    "save_csv",
    "save_predictions",
    "load_predictions",
    "split",
]

# Frequency band for the sinusoid bank, in radians over the normalized latent.
_FREQ_LOW = np.pi / 2
_FREQ_HIGH = 3 * np.pi


@dataclass
class Sample:
    features: np.ndarray
    target: float
    sigma: float | None = None


@dataclass
class SynthConfig:
    n: int = 2000
    dim: int = 16
    noise_std: float = 0.05
    curve: str = "sin"
    label_sigma: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.dim < 2:
            raise InvalidArgument(f"need n >= 1 and dim >= 2, got n={self.n}, dim={self.dim}")
        if self.noise_std < 0:
            raise InvalidArgument(f"noise_std must be >= 0, got {self.noise_std}")
        if self.curve != "sin":
            raise InvalidArgument(f"unknown embedding family {self.curve!r}")
        if self.label_sigma <= 0:
            raise InvalidArgument(f"label_sigma must be positive, got {self.label_sigma}")


@dataclass
class Dataset:
    """Column-major sample store; samples are ordered and indexable."""

    features: np.ndarray  # (n, d)
    targets: np.ndarray  # (n,)
    sigmas: np.ndarray | None  # (n,) or None when the source had no sigma column
    space: LabelSpace
    source: str

    def __len__(self) -> int:
        return self.targets.shape[0]

    def __getitem__(self, i: int) -> Sample:
        s = None if self.sigmas is None else float(self.sigmas[i])
        return Sample(self.features[i], float(self.targets[i]), s)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def samples(self) -> list[Sample]:
        return [self[i] for i in range(len(self))]


def gen_synthetic(config: SynthConfig, space: LabelSpace) -> Dataset:
    """Latent-uniform sinusoid-embedded dataset; the target is the latent itself."""
    rng = np.random.default_rng(config.seed)
    omega = rng.uniform(_FREQ_LOW, _FREQ_HIGH, config.dim)
    phase = rng.uniform(0.0, 2.0 * np.pi, config.dim)
    t = rng.uniform(space.l_min, space.l_max, config.n)
    tn = (t - space.l_min) / space.span
    features = np.sin(omega * tn[:, None] + phase)
    if config.noise_std > 0:
        features = features + rng.normal(0.0, config.noise_std, (config.n, config.dim))
    sigmas = np.full(config.n, config.label_sigma)
    source = (
        f"synthetic(curve={config.curve},n={config.n},dim={config.dim},"
        f"noise_std={config.noise_std},label_sigma={config.label_sigma},seed={config.seed})"
    )
    return Dataset(features, t, sigmas, space, source)


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"column {column}: not a number: {text!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"column {column}: non-finite value {text!r}", line)
    return value


def load_csv(path, space: LabelSpace) -> Dataset:
    """Read a feature/target table, validating the header and every cell."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1) from None
        header = [h.strip() for h in header]
        has_sigma = header[-1] == "sigma"
        names = header[:-1] if has_sigma else header
        if len(names) < 2 or names[-1] != "y":
            raise ParseError(f"header must be f0,...,y[,sigma]; got {header}", 1)
        d = len(names) - 1
        if names[:d] != [f"f{i}" for i in range(d)]:
            raise ParseError(f"feature columns must be f0..f{d - 1}; got {names[:d]}", 1)

        rows, targets, sigmas = [], [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} columns, found {len(row)}", line_no
                )
            rows.append([_parse_float(row[i], line_no, names[i]) for i in range(d)])
            targets.append(_parse_float(row[d], line_no, "y"))
            if has_sigma:
                s = _parse_float(row[d + 1], line_no, "sigma")
                if s <= 0:
                    raise ParseError(f"sigma must be positive, got {s}", line_no)
                sigmas.append(s)

    if not rows:
        raise DegenerateInput(f"{path}: no data rows")
    targets_arr = np.asarray(targets)
    outside = int(np.sum((targets_arr < space.l_min) | (targets_arr > space.l_max)))
    if outside:
        warnings.warn(
            f"{outside} target(s) outside grid [{space.l_min}, {space.l_max}]",
            OutOfRangeTarget,
            stacklevel=2,
        )
    return Dataset(
        np.asarray(rows),
        targets_arr,
        np.asarray(sigmas) if has_sigma else None,
        space,
        str(path),
    )


def save_csv(path, dataset: Dataset) -> None:
    """Write a dataset back out in the same header contract load_csv reads."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        names = [f"f{i}" for i in range(dataset.dim)] + ["y"]
        if dataset.sigmas is not None:
            names.append("sigma")
        writer.writerow(names)
        for i in range(len(dataset)):
            row = [repr(float(v)) for v in dataset.features[i]]
            row.append(repr(float(dataset.targets[i])))
            if dataset.sigmas is not None:
                row.append(repr(float(dataset.sigmas[i])))
            writer.writerow(row)


def save_predictions(path, y_true, y_pred) -> None:
    """index,y_true,y_pred rows with round-trip float formatting."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise InvalidArgument("y_true and y_pred must be equal-length vectors")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "y_true", "y_pred"])
        for i, (t, p) in enumerate(zip(y_true, y_pred)):
            writer.writerow([i, repr(float(t)), repr(float(p))])


def load_predictions(path):
    """Read back a predictions file. Returns (y_true, y_pred)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["index", "y_true", "y_pred"]:
            raise ParseError(f"expected header index,y_true,y_pred; got {header}", 1)
        truths, preds = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 columns, found {len(row)}", line_no)
            truths.append(_parse_float(row[1], line_no, "y_true"))
            preds.append(_parse_float(row[2], line_no, "y_pred"))
    return np.asarray(truths), np.asarray(preds)


def split(dataset: Dataset, train_fraction: float, seed: int):
    """Deterministic shuffled split into (train, test); both sides nonempty."""
    n = len(dataset)
    n_train = int(round(train_fraction * n))
    if not 1 <= n_train <= n - 1:
        raise InvalidArgument(
            f"train_fraction {train_fraction} leaves an empty side for n={n}"
        )
    perm = np.random.default_rng(seed).permutation(n)

    def take(idx, tag):
        return Dataset(
            dataset.features[idx],
            dataset.targets[idx],
            None if dataset.sigmas is None else dataset.sigmas[idx],
            dataset.space,
            f"{dataset.source}[{tag}]",
        )

    return take(perm[:n_train], "train"), take(perm[n_train:], "test")
