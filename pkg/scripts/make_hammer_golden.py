"""Regenerate tests/golden/hammer_truth.json by hand formulas (no package imports).

Structure: solid box lx*ly*lz, density rho, centred at (0, 0, lz/2).
Payloads: point masses at the slot centres of a 4x4 grid at mid height.
Inertia about the body origin: box COM inertia plus parallel-axis shift,
plus m_i (|p|^2 I - p p^T) for every payload.
"""

import json
from pathlib import Path

LX, LY, LZ, RHO = 0.117, 0.205, 0.058, 180.0
STEEL, ABS = 0.101, 0.017
LAYOUT = ["....", ".A..", ".A..", "SSSS"]  # rows along +y, columns along +x


def point_terms(m, p):
    x, y, z = p
    return [m, m * x, m * y, m * z,
            m * (y * y + z * z), -m * x * y, -m * x * z,
            m * (x * x + z * z), -m * y * z, m * (x * x + y * y)]


def main():
    mb = RHO * LX * LY * LZ
    cz = LZ / 2
    theta = [mb, 0.0, 0.0, mb * cz,
             mb / 12 * (LY**2 + LZ**2) + mb * cz**2, 0.0, 0.0,
             mb / 12 * (LX**2 + LZ**2) + mb * cz**2, 0.0,
             mb / 12 * (LX**2 + LY**2)]
    for r, row in enumerate(LAYOUT):
        for c, code in enumerate(row):
            if code == ".":
                continue
            p = ((c - 1.5) * LX / 4, (r - 1.5) * LY / 4, cz)
            theta = [a + b for a, b in zip(theta, point_terms(STEEL if code == "S" else ABS, p))]
    out = Path(__file__).resolve().parents[1] / "tests" / "golden" / "hammer_truth.json"
    names = ["m", "mcx", "mcy", "mcz", "Jxx", "Jxy", "Jxz", "Jyy", "Jyz", "Jzz"]
    out.write_text(json.dumps({"config": "Hammer", "theta": dict(zip(names, theta))}, indent=2) + "\n")
    print(out)


if __name__ == "__main__":
    main()
