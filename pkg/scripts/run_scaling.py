"""Log-log slope of the median row-wise singular vector error against n."""
import argparse

from _common import save
from sintheta import harness as H


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-grid", type=int, nargs="+", default=[200, 400, 800, 1600])
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--mu", type=float, default=3.0)
    p.add_argument("--sigma-frac", type=float, default=0.5)
    p.add_argument("--incoherence", choices=H.INCOHERENCE_MODES, default="incoherent")
    p.add_argument("--tail", choices=H.TAIL_MODES, default="zero")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results/scaling")
    args = p.parse_args()
    cfg = H.ScalingConfig(
        r=args.r,
        mu=args.mu,
        sigma_frac=args.sigma_frac,
        n_grid=tuple(args.n_grid),
        trials=args.trials,
        seed=args.seed,
        workers=args.workers,
        incoherence=args.incoherence,
        tail_mode=args.tail,
    )
    _, summary, records = H.run_scaling_study(cfg)
    save(args.out, f"scaling_{args.incoherence}_{args.tail}", cfg, summary, records)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
