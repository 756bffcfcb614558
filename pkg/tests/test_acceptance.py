"""Acceptance criteria at their stated sizes and tolerances.

Each test records one PASS/FAIL line through the ``criterion`` fixture; the
lines are repeated in the terminal summary.
"""
import json

import pytest

from sintheta import cli
from sintheta import harness as H

SEED = 20240101


@pytest.fixture(scope="module")
def identity_run():
    grid = H.default_identity_grid()
    cfg = H.IdentitySuiteConfig(grid=grid, trials=42, seed=SEED)
    return H.run_identity_suite(cfg)


@pytest.fixture(scope="module")
def bound_run():
    cfg = H.BoundSuiteConfig(grid=H.default_bound_grid(), trials=50, seed=SEED)
    return H.run_bound_suite(cfg)


def _rows(records, pred):
    return [row for rec in records if rec.status == "ok" for row in rec.rows if pred(row.bound_name)]


def test_c01_exact_formula_identity(identity_run, criterion):
    summary, records = identity_run
    evaluated = sum(rec.status == "ok" for rec in records)
    rows = _rows(records, lambda s: s.startswith("exact_"))
    bad = [r for r in rows if not r.dominated]
    worst = max(r.residual for r in rows)
    ok = evaluated >= 1000 and not bad and summary.errors == 0
    criterion(1, ok, f"instances={evaluated} entries-checks={len(rows)} failures={len(bad)} max abs err={worst:.2e}")
    assert ok


def test_c02_series_agreement(identity_run, criterion):
    _, records = identity_run
    series = [r for r in _rows(records, lambda s: s == "series") if r.assumptions_met]
    decay = _rows(records, lambda s: s.startswith("series_decay"))
    low = _rows(records, lambda s: s == "low_rank_series")
    low_decay = _rows(records, lambda s: s == "low_rank_decay")
    checked = series + decay + low + low_decay
    bad = [r for r in checked if not r.dominated]
    ok = len(series) > 0 and len(low) > 0 and not bad
    worst = max(r.residual for r in series + low)
    criterion(
        2, ok,
        f"series={len(series)} rank-r={len(low)} decay checks={len(decay) + len(low_decay)} "
        f"failures={len(bad)} max err={worst:.2e}",
    )
    assert ok


def test_c03_hadamard_lemma(identity_run, criterion):
    _, records = identity_run
    dom = _rows(records, lambda s: s.startswith("hadamard_"))
    wit = _rows(records, lambda s: s.startswith("witness_"))
    n_h = sum(r.bound_name.endswith("_spec") for r in dom)
    bad = [r for r in dom + wit if not r.dominated]
    ok = n_h >= 1000 and not bad
    worst = max(r.residual for r in wit)
    criterion(3, ok, f"random H={n_h} (both norms) witnesses={len(wit)} failures={len(bad)} max witness rel err={worst:.1e}")
    assert ok


def test_c04_deterministic_dominance(bound_run, criterion):
    summary, _ = bound_run
    counts = {name: summary.rates.get(name, (0, 0)) for name in H.DETERMINISTIC_BOUNDS}
    misses = {k: c - h for k, (h, c) in counts.items() if h != c}
    empty = [k for k, (_, c) in counts.items() if c == 0]
    ok = not misses and not empty and summary.errors == 0
    least = min(c for _, c in counts.values())
    criterion(4, ok, f"bounds={len(counts)} min trials with assumptions met={least} violations={sum(misses.values())}")
    assert ok, (misses, empty)


def test_c05_proof_identities(bound_run, criterion):
    _, records = bound_run
    names = ("svt_decomposition", "two_inf_decomposition", "s_minus_identity", "sqrt_rotation")
    parts = []
    ok = True
    for name in names:
        rows = _rows(records, lambda s, name=name: s == name)
        if name == "s_minus_identity":
            good = all(r.measured <= r.bound * (1 + 1e-10) + 1e-15 for r in rows)
            parts.append(f"{name}: {len(rows)} ok={good}")
        else:
            worst = max(r.residual for r in rows)
            good = worst <= 1e-10
            parts.append(f"{name} max={worst:.1e}")
        ok = ok and good and len(rows) > 0
    criterion(5, ok, "; ".join(parts))
    assert ok


def test_c06_low_rank_reductions(bound_run, criterion):
    _, records = bound_run
    rows = _rows(records, lambda s: s.endswith("_reduction"))
    worst = max(r.residual for r in rows)
    ok = len(rows) > 0 and worst <= 1e-12
    criterion(6, ok, f"checks={len(rows)} max rel err={worst:.1e}")
    assert ok


def test_c07_one_sided_tightening(criterion):
    res, _, _ = H.run_tightness_study(H.TightnessConfig(n=50, m=2000, r=2, trials=100, seed=SEED))
    ok = res.median_measured_ratio >= 2 and res.u_tighter_fraction >= 0.95
    criterion(
        7, ok,
        f"median sinV/sinU={res.median_measured_ratio:.3f} U bound tighter in {100 * res.u_tighter_fraction:.1f}% "
        f"median bound ratio={res.median_bound_ratio:.3f}",
    )
    assert ok


@pytest.mark.slow
def test_c08_two_to_infinity_scaling(criterion):
    lo, hi = cli.SLOPE_BAND
    out = []
    ok = True
    for tail in ("zero", "geometric"):
        cfg = H.ScalingConfig(r=2, mu=3.0, trials=50, seed=SEED, tail_mode=tail)
        res, _, _ = H.run_scaling_study(cfg)
        good = res.regressed and lo <= res.slope <= hi
        ok = ok and good
        label = "incoherent rank-2" if tail == "zero" else "full-rank geometric"
        out.append(f"{label} slope={res.slope:.3f} [{res.ci_low:.3f}, {res.ci_high:.3f}]")
    criterion(8, ok, "; ".join(out) + f" band=[{lo}, {hi}]")
    assert ok


def test_c09_classical_checks(criterion):
    summary, _ = H.run_classical_suite(H.ClassicalSuiteConfig(trials=500, seed=SEED))
    ok = summary.ok and summary.passed == 500
    rates = {k: summary.rate(k) for k in ("weyl", "thompson", "power_sum")}
    criterion(9, ok, "pairs=500 " + " ".join(f"{k}={100 * v:.1f}%" for k, v in rates.items()))
    assert ok


def test_c10_reproducibility(tmp_path, criterion):
    same = []
    for sub, trials in (("verify", 3), ("bounds", 2)):
        outs = []
        for workers in (1, 2):
            out = tmp_path / f"{sub}_{workers}"
            cfg = {"subcommand": sub, "seed": SEED, "trials": trials, "workers": workers, "out": str(out)}
            path = tmp_path / f"{sub}_{workers}.json"
            path.write_text(json.dumps(cfg))
            status = cli.main(["--config", str(path)])
            assert status == cli.EXIT_OK
            csv_name = "identity.csv" if sub == "verify" else "bounds.csv"
            outs.append((out / csv_name).read_bytes())
        same.append(outs[0] == outs[1] and len(outs[0]) > 0)
    ok = all(same)
    criterion(10, ok, f"verify identical={same[0]} bounds identical={same[1]} (workers 1 vs 2)")
    assert ok

