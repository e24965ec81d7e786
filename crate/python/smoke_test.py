"""Smoke test for the `lptx` extension module.

Build and install next to this script, then run it:

    cargo build --release -p lptx-py
    cp target/release/liblptx.so python/lptx.so
    python3 python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import lptx  # noqa: E402


def main():
    grid = lptx.Grid(32)
    assert grid.n == 32 and grid.k_max == 3
    assert abs(grid.length - 2 * math.pi) < 1e-15

    n = grid.n
    samples = []
    for i in range(n):
        for j in range(n):
            x, y = grid.point(i, j)
            samples.append(math.cos(3 * x) + 0.5 * math.sin(5 * y))
    f = lptx.Field(grid, samples)
    assert len(f) == n * n and not f.spectral

    spectral = f.forward()
    assert spectral.spectral
    back = spectral.inverse()
    assert max(abs(a - b) for a, b in zip(back.values(), f.values())) < 1e-12

    # Parseval for the unitary transform.
    energy = sum(abs(v) ** 2 for v in spectral.values())
    assert abs(math.sqrt(energy) - lptx.lp_norm(f, 2.0)) < 1e-10

    pieces = lptx.decompose(f)
    assert [k for k, _ in pieces] == list(range(grid.k_max + 1))
    total = lptx.recompose(pieces)
    assert max(abs(v) for v in (total - f).values()) < 1e-10

    riesz = lptx.Multiplier(grid, "riesz(1,1)")
    mf = riesz(f)
    assert lptx.lp_norm(mf, 2.0) <= lptx.lp_norm(f, 2.0) * (1 + 1e-12)
    assert lptx.weak_l1(f) <= lptx.lp_norm(f, 1.0) * (1 + 1e-12)
    assert lptx.log_plus(0.0) == math.log(2.0)
    assert lptx.n_of_field(f) >= 1.0
    assert lptx.alpha_exponent([1, 2], [1, 2]) == 0.0

    try:
        lptx.Grid(5)
    except ValueError:
        pass
    else:
        raise AssertionError("odd grid accepted")

    ids = [e[0] for e in lptx.experiments()]
    assert len(ids) == 8 and "simplex" in ids

    report = lptx.run("simplex", samples=2, simplex_n=[2, 3], seed=4)
    assert report["experiment"] == "simplex"
    assert report["verdict"] == "pass"
    assert all(row["ratio"] <= 1.02 for row in report["rows"])

    try:
        lptx.run("simplex", bogus=1)
    except TypeError:
        pass
    else:
        raise AssertionError("unknown setting accepted")

    print("lptx smoke test passed")


if __name__ == "__main__":
    main()
