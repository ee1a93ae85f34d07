#!/usr/bin/env python3
"""Cumulative-runtime experiment: replay the 10-iteration synthetic trace
with and without cross-iteration reuse and print per-iteration virtual times.

Usage: python scripts/fig3_trace.py [workdir]
"""

import sys
import tempfile
from pathlib import Path

from iterflow import demo


def main() -> int:
    workdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
    optimized = demo.run_trace(workdir / "optimized", no_reuse=False)
    baseline = demo.run_trace(workdir / "baseline", no_reuse=True)

    depths = ("initial",) + demo.edit_depths()
    print(f"{'iter':>4}  {'edit':<8} {'optimized_ms':>12} {'baseline_ms':>12}")
    cum_opt = cum_base = 0
    for i, depth in enumerate(depths):
        opt_us = optimized.per_iteration_us[i]
        base_us = baseline.per_iteration_us[i]
        cum_opt += opt_us
        cum_base += base_us
        print(f"{i:>4}  {depth:<8} {opt_us / 1000:>12.1f} {base_us / 1000:>12.1f}")
    ratio = cum_opt / cum_base
    print()
    print(f"cumulative optimized: {cum_opt / 1e6:.2f}s")
    print(f"cumulative baseline:  {cum_base / 1e6:.2f}s")
    print(f"optimized/baseline:   {ratio:.1%}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
