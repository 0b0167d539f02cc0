#!/usr/bin/env python3
"""Audit every analytic gradient against central finite differences.

Sweeps random head configurations and reports the worst relative error
per family; anything above the tolerance is listed config by config.
"""

from __future__ import annotations

import argparse
import time

from labeldist import run_suite, suite_worst


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--configs", type=int, default=40)
    parser.add_argument("--tolerance", type=float, default=1e-6)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    t0 = time.perf_counter()
    results = run_suite(n_configs=args.configs, base_seed=args.seed)
    elapsed = time.perf_counter() - t0
    worst = suite_worst(results)

    failed = 0
    for family, checks in results.items():
        print(f"{family}: {len(checks)} configs, worst {worst[family]:.3e}")
        for check in checks:
            if check.worst >= args.tolerance:
                failed += 1
                print(f"  OVER TOLERANCE {check}")
    print(f"\n{args.configs} configs x {len(results)} families in {elapsed:.1f}s")
    if failed:
        print(f"{failed} checks over tolerance {args.tolerance}")
        return 1
    print(f"all checks under {args.tolerance}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
