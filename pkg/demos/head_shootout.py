#!/usr/bin/env python3
"""Race every head family on the same synthetic benchmark.

A compact version of the `labeldist compare` command: same data, same
backbone, same optimizer, only the output head and its loss change.
"""

from __future__ import annotations

import argparse
import statistics

from labeldist import (
    HEAD_KINDS,
    SynthConfig,
    gen_synthetic,
    mae,
    make_label_space,
    predict_batch,
    split,
    train_model,
)


def run(kind: str, n: int, dim: int, epochs: int, seed: int) -> float:
    space = make_label_space(0.0, 100.0, 1.0)
    dataset = gen_synthetic(SynthConfig(n=n, dim=dim, noise_std=0.05, seed=seed), space)
    train, test = split(dataset, 0.8, seed)
    result = train_model(
        train, kind=kind, backbone_dims=[dim, 64, 64], epochs=epochs, seed=seed
    )
    return float(mae(predict_batch(result.model, test.features), test.targets))


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--seeds", type=int, default=2)
    args = parser.parse_args()

    print(f"{'head':>8} {'median mae':>12} {'per-seed':>24}")
    for kind in HEAD_KINDS:
        maes = [run(kind, args.n, args.dim, args.epochs, s) for s in range(args.seeds)]
        per_seed = " ".join(f"{m:.4f}" for m in maes)
        print(f"{kind:>8} {statistics.median(maes):>12.4f} {per_seed:>24}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
