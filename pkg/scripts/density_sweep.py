"""Point density sweep: PMD accuracy and solve time against points per cm^3.

    python scripts/density_sweep.py --densities 0.01 0.04 0.09 0.25
"""

from _common import OBJECTS, TrialSpec, parser, print_table, run


def main():
    p = parser(__doc__, "results/density")
    p.add_argument("--densities", nargs="+", type=float, default=[0.01, 0.02, 0.04, 0.09, 0.16, 0.25])
    p.add_argument("--speed", type=float, default=1.0)
    args = p.parse_args()
    result = run(args, TrialSpec(speed=args.speed, estimators=("PMD",)),
                 {"density": tuple(args.densities), "object": OBJECTS})
    print_table(result.figures["by_density"], ("density",))


if __name__ == "__main__":
    main()
