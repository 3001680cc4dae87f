"""Fast-inference comparison: 150 observations at about 1 rad/s, moderate noise.

Averages mass, COM and inertia errors of PMD, OLS and RTLS over the eight
test objects and several seeds.

    python scripts/low_speed_comparison.py --repetitions 3
"""

from _common import OBJECTS, TrialSpec, parser, print_table, run
from cobot_inertia.bench import group_means


def main():
    p = parser(__doc__, "results/low_speed")
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--noise", default="Moderate")
    args = p.parse_args()
    base = TrialSpec(speed=args.speed, noise=args.noise, observations=150)
    result = run(args, base, {"object": OBJECTS})
    print_table(group_means(result.rows, ()), ())


if __name__ == "__main__":
    main()
