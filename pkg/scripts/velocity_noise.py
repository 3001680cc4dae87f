"""Velocity x noise grid for PMD, OLS and RTLS (5 speeds x 4 noise levels x 8 objects).

    python scripts/velocity_noise.py --workers 4
"""

from _common import OBJECTS, TrialSpec, parser, print_table, run
from cobot_inertia.signals import NOISE_PRESETS


def main():
    p = parser(__doc__, "results/velocity_noise")
    p.add_argument("--speeds", nargs="+", type=float, default=[1.0, 1.5, 2.0, 3.0, 4.0])
    args = p.parse_args()
    grid = {"speed": tuple(args.speeds), "noise": tuple(NOISE_PRESETS), "object": OBJECTS}
    result = run(args, TrialSpec(), grid)
    print_table(result.figures["by_noise_speed"], ("noise", "speed"))


if __name__ == "__main__":
    main()
