#!/usr/bin/env python3
"""Writes tests/fixtures/erf_reference.json: erf(z) at 50 significant digits.

Values come from mpmath's arbitrary-precision erf, cross-checked against
direct quadrature of 2/sqrt(pi) * exp(-t^2) on [0, z].
"""
import json
import pathlib

import mpmath

mpmath.mp.dps = 50


def by_quadrature(z):
    return 2 / mpmath.sqrt(mpmath.pi) * mpmath.quad(lambda t: mpmath.exp(-t * t), [0, z])


def main():
    points = sorted({mpmath.mpf(k) / 64 for k in range(-512, 513)} |
                    {mpmath.mpf(v) for v in ["1e-12", "1e-6", "0.001", "2.49", "2.5", "2.51",
                                              "3.7", "5.9", "6", "7.5", "10", "27"]})
    rows = []
    for z in points:
        value = mpmath.erf(z)
        assert abs(value - by_quadrature(z)) < mpmath.mpf("1e-30")
        rows.append({"z": mpmath.nstr(z, 30), "erf": mpmath.nstr(value, 30)})
    out = pathlib.Path(__file__).resolve().parents[1] / "fixtures" / "erf_reference.json"
    out.write_text(json.dumps({"digits": 30, "points": rows}, indent=1) + "\n")
    print(f"wrote {len(rows)} points to {out}")


if __name__ == "__main__":
    main()
