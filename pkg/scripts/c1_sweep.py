"""Weight scale sweep: PMD accuracy against the dynamism scale c1.

    python scripts/c1_sweep.py --c1s 1 10 100 300 1000
"""

from _common import OBJECTS, TrialSpec, parser, print_table, run


def main():
    p = parser(__doc__, "results/c1")
    p.add_argument("--c1s", nargs="+", type=float, default=[1.0, 10.0, 30.0, 100.0, 300.0, 1000.0, 10000.0])
    p.add_argument("--speed", type=float, default=1.0)
    args = p.parse_args()
    result = run(args, TrialSpec(speed=args.speed, estimators=("PMD",)), {"c1": tuple(args.c1s), "object": OBJECTS})
    print_table(result.figures["by_c1"], ("c1",))


if __name__ == "__main__":
    main()
