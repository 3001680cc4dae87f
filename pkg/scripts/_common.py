"""Shared command-line handling for the experiment scripts."""

import argparse

from cobot_inertia.bench import SweepSpec, TrialSpec, run_sweep
from cobot_inertia.discretization import ALL_CONFIGS

OBJECTS = tuple(c.value for c in ALL_CONFIGS)


def parser(description, default_dir):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--seed", type=int, default=0, help="base noise seed")
    p.add_argument("--repetitions", type=int, default=1, help="seeds per cell (seed, seed+1, ...)")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--output-dir", default=default_dir)
    return p


def run(args, base, grid):
    spec = SweepSpec(base=base, grid=grid, repetitions=args.repetitions, seed=args.seed, workers=args.workers)
    result = run_sweep(spec, args.output_dir)
    print(f"{len(spec.cells())} cells, {len(result.rows)} rows -> {args.output_dir}")
    return result


def print_table(entries, keys):
    cols = list(keys) + ["estimator", "mass_err", "com_err", "inertia_err", "consistent_rate", "wall_time"]
    print("  ".join(f"{c:>14s}" for c in cols))
    for e in entries:
        cells = []
        for c in cols:
            v = e[c]
            cells.append(f"{v:>14.4g}" if isinstance(v, float) else f"{str(v):>14s}")
        print("  ".join(cells))


__all__ = ["OBJECTS", "TrialSpec", "parser", "print_table", "run"]
