"""Fit the free constants of the row-wise bound on a grid of powers of two."""
import argparse

from _common import save
from sintheta import harness as H


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--bound", default="two_to_infinity", help="bound id (only calibrated bounds are accepted)")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--target", type=float, default=0.95)
    p.add_argument("--sigma-frac", type=float, default=0.5)
    p.add_argument("--tail", choices=H.TAIL_MODES, default="zero")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results/calibration")
    args = p.parse_args()
    top = tuple(float(v) for v in range(args.r + 1, 1, -1)) if args.r > 1 else (2.0,)
    cfg = H.CalibrationConfig(
        n=args.n, m=args.m, r=args.r, trials=args.trials, seed=args.seed, workers=args.workers,
        target=args.target, sigma_frac=args.sigma_frac, tail_mode=args.tail, top_values=top,
    )
    try:
        _, summary, records = H.calibrate_constants(args.bound, cfg)
    except ValueError as exc:
        p.error(str(exc))
    save(args.out, "calibration", cfg, summary, records)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
