"""Integrated Bochner slack and its refinement error for the flat and Gaussian structures."""
import argparse
import math

from finslerlab import norms, verify

STRUCTURES = {
    "euclidean": norms.euclidean(),
    "randers": norms.randers((0.5, 0.0)),
    "quartic": norms.quartic(0.1),
    "gaussian": norms.euclidean(density="-(x1**2 + x2**2)/2"),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--N", type=float, default=math.inf)
    args = ap.parse_args()
    hs = tuple(1 / 32 / 2**k for k in range(args.levels))
    boundary = lambda X: X[:, 0] ** 2 - X[:, 1] ** 2 + X[:, 0]  # noqa: E731
    for name, S in STRUCTURES.items():
        for r in verify.bochner_refinement(S, boundary, hs=hs, N=args.N):
            eps = r.extras.get("eps_h", float("nan"))
            print(f"{name:10s} h = 1/{round(1 / r.params['h']):<4d} slack = {r.slack:.6g}  eps_h = {eps:.3e}  N = {r.params['N']:g}")


if __name__ == "__main__":
    main()
