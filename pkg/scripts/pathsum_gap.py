"""Where the path sum exceeds the nearest-neighbour closed form, per spin.

At short times only the shortest path (length d) matters, and
pathsum / closed form -> 2 (w / 2Js^2)^d d^d / (d! e^d) with bond weight
w = ||S.S||. The factor d^d / (d! e^d) decays like 1/sqrt(2 pi d), so the
closed form is only safe when w <= 2Js^2. That holds for s >= 1 but not
for s = 1/2, where w / 2Js^2 = 3/2.
"""

import argparse

import numpy as np

from lrlab.bounds import new_bound_1d_system, new_bound_pathsum
from lrlab.constants import HBAR
from lrlab.model import heisenberg_chain, heisenberg_term


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--spins", type=float, nargs="+", default=[0.5, 1.0, 1.5])
    ap.add_argument("--max-length", type=int, default=12)
    ap.add_argument("--stop", type=float, default=20.0)
    args = ap.parse_args()
    ts = np.linspace(0, args.stop, 2001)
    for s in args.spins:
        w = heisenberg_term(0, 1, 1.0, s).norm
        print(f"s={s:g}: bond norm {w:.4f} vs J s^2 = {s * s:.4f}")
        for n in range(2, args.max_length + 1):
            chain = heisenberg_chain(n, s, J=1.0)
            gap = new_bound_1d_system(ts, 0, n - 1, chain) - new_bound_pathsum(ts, [0], [n - 1], chain)
            small = ts[1] / 10
            r = new_bound_pathsum(small, [0], [n - 1], chain) / new_bound_1d_system(small, 0, n - 1, chain)
            print(f"  n={n:2d}  min gap {gap.min(): .3e} at t={ts[np.argmin(gap)]:.3f} ps  short-time ratio {r:.3e}")
    print(f"(times in ps; hbar = {HBAR} meV ps)")


if __name__ == "__main__":
    main()
