"""Decay of max_{B_1} F(grad u) on growing balls, with the linear negative control."""
import argparse

from finslerlab import norms, verify
from finslerlab.svg import plot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--drift", type=float, default=0.0, help="Randers drift along x1 (0 gives the Euclidean norm)")
    ap.add_argument("--radii", type=float, nargs="+", default=[2, 4, 8, 16])
    ap.add_argument("--h-rel", type=float, default=1 / 32)
    ap.add_argument("--svg", default="out/liouville.svg")
    args = ap.parse_args()
    S = norms.randers((args.drift, 0.0)) if args.drift else norms.euclidean()
    bounded = verify.liouville_trend(S, verify.positive_boundary_data(0), radii=args.radii, h_rel=args.h_rel)
    control = verify.liouville_trend(S, lambda x: x[:, 0], radii=args.radii, h_rel=args.h_rel, scaled=False)
    for R, m in bounded.trace:
        print(f"R = {R:5g}  max F(grad u) on B_1 = {m:.4g}")
    print(f"fitted slope {bounded.lhs:.3f} (threshold {bounded.rhs}); control slope {control.lhs:.2e}")
    plot([{"x": [t[0] for t in r.trace], "y": [t[1] for t in r.trace], "label": lab}
          for r, lab in ((bounded, "bounded data"), (control, "u = x1"))],
         args.svg, title="Liouville trend", xlabel="R", ylabel="max F(grad u)", logx=True, logy=True)


if __name__ == "__main__":
    main()
