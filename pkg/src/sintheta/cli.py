"""Command-line entry point.

    sintheta verify|bounds|tightness|scaling|calibrate|svt|pca [--config PATH]
             [--seed U64] [--out DIR] [--trials N] [--tol X] [--workers N]
             [--A PATH --dA PATH | --At PATH --r R]

Exit status: 0 when every hard check passes, 2 on a failed check, 1 on a
usage or I/O error.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import harness
from .config import SUBCOMMANDS, ConfigError, parse_config, write_echo
from .linalg import conformal_svd
from .matio import read_matrix

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAIL = 2

CSV_COLUMNS = (
    "seed",
    "n",
    "m",
    "r",
    "sigma",
    "bound_name",
    "bound",
    "measured",
    "dominated",
    "assumptions_met",
    "residual",
    "wall_ms",
)

SLOPE_BAND = (-0.65, -0.35)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser():
    p = _Parser(prog="sintheta", description="Angular perturbation formulae and bound verification.")
    p.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--out", help="output directory (env SINTHETA_OUT is the fallback)")
    p.add_argument("--trials", type=int)
    p.add_argument("--tol", type=float, help="base identity tolerance (default 1e-9)")
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", dest="record_timing", action="store_const", const=True,
                   help="record wall-clock time per trial (breaks byte-identical output)")
    p.add_argument("--A", dest="A", help="matrix file (.csv or raw binary)")
    p.add_argument("--dA", dest="dA", help="perturbation matrix file")
    p.add_argument("--At", dest="At", help="perturbed matrix file")
    p.add_argument("--r", dest="r", type=int, help="split rank for single-instance runs")
    return p


# --- output ------------------------------------------------------------------


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def emit_csv(records, path):
    """Write one row per (trial, check) with the fixed column order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in records:
            head = [_fmt(rec.seed), _fmt(rec.n), _fmt(rec.m), _fmt(rec.r), _fmt(rec.sigma)]
            tail = [_fmt(rec.wall_ms)]
            if rec.status in ("skipped", "error"):
                label = f"{rec.status}:{rec.reason.split(':')[0]}"
                w.writerow(head + [label, "nan", "nan", "false", "false", "nan"] + tail)
            for row in rec.rows:
                w.writerow(
                    head
                    + [row.bound_name, _fmt(row.bound), _fmt(row.measured), _fmt(row.dominated),
                       _fmt(row.assumptions_met), _fmt(row.residual)]
                    + tail
                )
    return path


def read_csv_records(path):
    """Parse an emitted CSV back into dicts with numeric fields as floats."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            for key in ("sigma", "bound", "measured", "residual", "wall_ms"):
                row[key] = float(row[key])
            for key in ("seed", "n", "m", "r"):
                row[key] = int(row[key])
            for key in ("dominated", "assumptions_met"):
                row[key] = row[key] == "true"
            out.append(row)
    return out


def _summary_lines(s):
    verdict = "PASS" if s.ok else "FAIL"
    gap_skips = s.skip_reasons.get("gap", 0)
    lines = [
        f"[{s.name}] {verdict}  trials={s.total} passed={s.passed} failed={s.failed} "
        f"skipped (gap)={gap_skips} errors={s.errors}"
    ]
    for name in sorted(s.max_residuals):
        lines.append(f"  max residual {name} = {s.max_residuals[name]:.3e}")
    for name in sorted(s.rates):
        hits, count = s.rates[name]
        lines.append(f"  dominance {name} = {100.0 * hits / count:.3f}% ({hits}/{count})")
    if "slope" in s.extra:
        e = s.extra
        if e.get("regressed"):
            lines.append(f"  slope = {e['slope']:.4f} (95% CI [{e['ci_low']:.4f}, {e['ci_high']:.4f}])")
            lo, hi = SLOPE_BAND
            band = "inside" if lo <= e["slope"] <= hi else "outside"
            lines.append(f"  slope band [{lo}, {hi}]: {band}")
        else:
            lines.append("  slope = n/a (regression skipped)")
        lines.append("  medians = " + ", ".join(f"n={n}: {v:.4e}" for n, v in zip(e["n_grid"], e["medians"])))
    if "c1" in s.extra:
        e = s.extra
        lines.append(
            f"  calibrated c1 = {e['c1']:g}, c2 = {e['c2']:g}, dominance = {e['dominance']:.4f} "
            f"(target {e['target']}, feasible={e['feasible']})"
        )
    if "median_measured_ratio" in s.extra:
        e = s.extra
        lines.append(f"  median sin(V)/sin(U) = {e['median_measured_ratio']:.4f}")
        lines.append(f"  median symmetric/one-sided U bound = {e['median_bound_ratio']:.4f}")
        lines.append(f"  one-sided U tighter in {100 * e['u_tighter_fraction']:.1f}% of trials")
    for seed, row, trial, what in s.failures[:20]:
        lines.append(f"  failure seed={seed} row={row} trial={trial}: {what}")
    return lines


def emit_report(summaries, path, echo_path=None):
    lines = ["sintheta report"]
    if echo_path is not None:
        lines.append(f"config echo: {echo_path} (rerun with --config on this file to reproduce)")
    for s in summaries:
        lines.extend(_summary_lines(s))
    Path(path).write_text("\n".join(lines) + "\n")
    return path


# --- dispatch ----------------------------------------------------------------


def _grid_from(cfg, default):
    if not cfg.grid:
        return default()
    rows = []
    for item in cfg.grid:
        sp = dict(item["spectrum"])
        if "top_values" in sp:
            sp["top_values"] = tuple(sp["top_values"])
        rows.append(
            harness.GridRow(
                harness.SpectrumSpec(**sp),
                harness.NoiseSpec(**item["noise"]),
                item.get("incoherence", "haar"),
                item.get("mu"),
            )
        )
    return tuple(rows)


def _load_instance(cfg):
    inp = cfg.inputs
    if "A" not in inp:
        return None
    if "r" not in inp:
        raise UsageError("single-instance runs need --r")
    A = read_matrix(inp["A"])
    dA = read_matrix(inp["dA"]) if "dA" in inp else None
    At = read_matrix(inp["At"]) if "At" in inp else None
    if dA is None and At is None:
        raise UsageError("give --dA or --At together with --A")
    if dA is None:
        dA = At - A
    if At is None:
        At = A + dA
    if not (A.shape == dA.shape == At.shape):
        raise UsageError(f"shape mismatch: A {A.shape}, dA {dA.shape}, At {At.shape}")
    return A, dA, At, int(inp["r"])


def _single_record(cfg, A, dA, r):
    n, m = A.shape
    _, seed64 = harness.trial_rng(cfg.seed, 0, 0)
    return harness.TrialRecord(seed64, n, m, r, 0.0, 0, 0)


def _run_single_verify(cfg, inst):
    A, dA, At, r = inst
    rng, _ = harness.trial_rng(cfg.seed, 0, 0)
    rec = _single_record(cfg, A, dA, r)
    svdA, svdB = conformal_svd(A, r), conformal_svd(At, r)
    icfg = harness.IdentitySuiteConfig(grid=(), tol_base=cfg.tol)
    gaps = harness.spectral_gap_check(svdA, svdB)
    if not gaps.ok:
        rec.status, rec.reason = "skipped", "gap"
    else:
        rec.rows = harness.identity_checks(svdA, svdB, dA, icfg, rng)
    return harness.summarize("identity", [rec]), [rec]


def _run_single_bounds(cfg, inst, families):
    A, dA, At, r = inst
    rec = _single_record(cfg, A, dA, r)
    svdA, svdB = conformal_svd(A, r), conformal_svd(At, r)
    bcfg = harness.BoundSuiteConfig(grid=(), families=families)
    for rep in harness.bound_reports(svdA, svdB, dA, A, 0.0, families):
        rec.rows.append(harness.CsvRow(rep.name, rep.bound, rep.measured, rep.dominated, rep.assumptions_met, math.nan))
    rec.rows.extend(harness.identity_rows_for_bounds(svdA, svdB, dA, A, bcfg))
    return harness.summarize("bounds", [rec], harness._bound_hard), [rec]


_FAMILIES = {
    "bounds": ("sin", "subspace", "svt", "pca", "two_inf", "classical"),
    "svt": ("svt",),
    "pca": ("pca",),
}


def run_subcommand(cfg):
    """Run the suite for ``cfg.subcommand``; returns [(summary, records, csv_name)]."""
    sub = cfg.subcommand
    inst = _load_instance(cfg)
    workers = cfg.workers
    if sub == "verify":
        if inst is not None:
            s, recs = _run_single_verify(cfg, inst)
        else:
            icfg = harness.IdentitySuiteConfig(
                grid=_grid_from(cfg, harness.default_identity_grid),
                trials=cfg.trials or 50,
                seed=cfg.seed,
                workers=workers,
                tol_base=cfg.tol,
                record_timing=cfg.record_timing,
            )
            s, recs = harness.run_identity_suite(icfg)
        return [(s, recs, "identity.csv")]
    if sub in _FAMILIES:
        fam = _FAMILIES[sub]
        if inst is not None:
            s, recs = _run_single_bounds(cfg, inst, fam)
        else:
            bcfg = harness.BoundSuiteConfig(
                grid=_grid_from(cfg, harness.default_bound_grid),
                trials=cfg.trials or 25,
                seed=cfg.seed,
                workers=workers,
                families=fam,
                record_timing=cfg.record_timing,
            )
            s, recs = harness.run_bound_suite(bcfg)
        s.name = sub
        return [(s, recs, f"{sub}.csv")]
    if sub == "tightness":
        t = cfg.tightness
        tcfg = harness.TightnessConfig(
            n=t.get("n", 50), m=t.get("m", 2000), r=t.get("r", 2), sigma=t.get("sigma"),
            trials=cfg.trials or 100, seed=cfg.seed, workers=workers, record_timing=cfg.record_timing,
        )
        _, s, recs = harness.run_tightness_study(tcfg)
        return [(s, recs, "tightness.csv")]
    if sub == "scaling":
        sc = cfg.scaling
        kwargs = {k: (tuple(v) if isinstance(v, list) else v) for k, v in sc.items()}
        scfg = harness.ScalingConfig(
            trials=cfg.trials or 50, seed=cfg.seed, workers=workers, record_timing=cfg.record_timing, **kwargs
        )
        _, s, recs = harness.run_scaling_study(scfg)
        return [(s, recs, "scaling.csv")]
    if sub == "calibrate":
        c = dict(cfg.calibrate)
        bound_id = c.pop("bound_id", "two_to_infinity")
        if "grid" in c:
            c["grid"] = tuple(c["grid"])
        ccfg = harness.CalibrationConfig(
            trials=cfg.trials or 200, seed=cfg.seed, workers=workers, record_timing=cfg.record_timing, **c
        )
        _, s, recs = harness.calibrate_constants(bound_id, ccfg)
        return [(s, recs, "calibrate.csv")]
    raise UsageError(f"unknown subcommand {sub!r}")


def dispatch(cfg):
    """Run, write config echo, CSV and report; return the exit status."""
    out = Path(cfg.out)
    echo = write_echo(cfg, out)
    results = run_subcommand(cfg)
    for s, recs, name in results:
        emit_csv(recs, out / name)
    emit_report([s for s, _, _ in results], out / "report.txt", echo)
    return EXIT_OK if all(s.ok for s, _, _ in results) else EXIT_FAIL


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        flags = vars(ns)
        path = flags.pop("config")
        if path is None and flags.get("subcommand") is None:
            raise UsageError("a subcommand or --config is required")
        cfg = parse_config(path, flags)
        status = dispatch(cfg)
    except (UsageError, ConfigError) as exc:
        print(f"sintheta: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"sintheta: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = Path(cfg.out) / "report.txt"
    print(report.read_text(), end="")
    return status


if __name__ == "__main__":
    sys.exit(main())
