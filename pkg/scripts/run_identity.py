"""Exact-formula, series and Hadamard-lemma checks over the default identity grid."""
import argparse

from _common import save
from sintheta import harness as H


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--trials", type=int, default=42, help="trials per grid row (24 rows)")
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", default="results/identity")
    args = p.parse_args()
    cfg = H.IdentitySuiteConfig(
        grid=H.default_identity_grid(), trials=args.trials, seed=args.seed, workers=args.workers, tol_base=args.tol
    )
    summary, records = H.run_identity_suite(cfg)
    save(args.out, "identity", cfg, summary, records)
    return 0 if summary.ok else 2


if __name__ == "__main__":
    raise SystemExit(main())
