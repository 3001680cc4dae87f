"""Error against observation horizon: estimates at checkpoints after filter stabilization.

    python scripts/error_vs_time.py --checkpoints 1.5 5 10 20 30
"""

from _common import OBJECTS, TrialSpec, parser, print_table, run


def main():
    p = parser(__doc__, "results/error_vs_time")
    p.add_argument("--checkpoints", nargs="+", type=float, default=[1.5, 5.0, 10.0, 20.0, 30.0])
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--noise", default="Moderate")
    args = p.parse_args()
    base = TrialSpec(speed=args.speed, noise=args.noise, observations=None, checkpoints=tuple(args.checkpoints))
    result = run(args, base, {"object": OBJECTS})
    print_table(result.figures["by_horizon"], ("horizon",))


if __name__ == "__main__":
    main()
