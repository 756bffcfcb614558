import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sintheta import harness as H
from sintheta.linalg import conformal_svd, spectral_norm, two_to_infinity_norm


def test_spectrum_defaults_and_invariants():
    s = H.SpectrumSpec(5, 4, 2)
    assert s.top_values == (2.0, 1.0)
    np.testing.assert_array_equal(s.singular_values(), [2.0, 1.0, 0.0, 0.0])
    assert s.gap == 1.0
    g = H.SpectrumSpec(6, 6, 2, (3.0, 2.0), "geometric", gap_target=0.5, tail_ratio=0.5)
    np.testing.assert_allclose(g.singular_values()[2:], 1.5 * 0.5 ** np.arange(4))
    assert g.gap == pytest.approx(0.5)
    c = H.SpectrumSpec(4, 4, 1, (1.0,), "constant", gap_target=0.25)
    np.testing.assert_allclose(c.singular_values(), [1.0, 0.75, 0.75, 0.75])


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n=3, m=3, r=0),
        dict(n=3, m=3, r=4),
        dict(n=3, m=3, r=1, tail_mode="cubic"),
        dict(n=3, m=3, r=2, top_values=(1.0, 2.0)),
        dict(n=3, m=3, r=1, top_values=(1.0,), tail_mode="constant", gap_target=2.0),
        dict(n=3, m=3, r=1, tail_ratio=0.0),
    ],
)
def test_spectrum_rejects(kwargs):
    with pytest.raises(ValueError):
        H.SpectrumSpec(**kwargs)


def test_noise_spec_rules():
    assert H.NoiseSpec("zero").level == 0.0
    with pytest.raises(ValueError):
        H.NoiseSpec(sigma=0.0)
    with pytest.raises(ValueError):
        H.NoiseSpec()
    with pytest.raises(ValueError):
        H.NoiseSpec(sigma=1.0, relative=1.0)
    with pytest.raises(ValueError):
        H.NoiseSpec("laplace", sigma=1.0)
    assert np.all(H.gen_noise(H.NoiseSpec("zero"), 3, 2) == 0)


def test_noise_moments():
    sigma = 0.3
    E = H.gen_noise(H.NoiseSpec(sigma=sigma), 300, 200, seed=4)
    N = E.size
    assert abs(E.mean()) <= 5 * sigma / math.sqrt(N)
    # variance of the sample variance is about 2 sigma^4 / N
    assert abs(E.var() - sigma**2) <= 5 * sigma**2 * math.sqrt(2 / N)


def test_relative_noise_scale():
    E = H.gen_noise(H.NoiseSpec(relative=0.2), 8, 5, seed=1, gap=3.0)
    assert spectral_norm(E) == pytest.approx(0.6, rel=1e-12)
    with pytest.raises(ValueError):
        H.gen_noise(H.NoiseSpec(relative=0.2), 8, 5, seed=1)


def test_noise_norm_event():
    n, sigma, draws = 200, 1.0, 200
    hits = 0
    for t in range(draws):
        rng, _ = H.trial_rng(99, 0, t)
        E = H.gen_noise(H.NoiseSpec(sigma=sigma), n, n, rng)
        hits += spectral_norm(E) <= 3 * sigma * math.sqrt(n)
    assert hits / draws >= 0.99


def test_trial_rng_counter_splitting():
    a, sa = H.trial_rng(7, 1, 2)
    b, sb = H.trial_rng(7, 1, 2)
    assert sa == sb and np.array_equal(a.standard_normal(4), b.standard_normal(4))
    assert H.trial_rng(7, 1, 3)[1] != sa and H.trial_rng(7, 2, 2)[1] != sa and H.trial_rng(8, 1, 2)[1] != sa


@settings(max_examples=25)
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(2, 15),
    m=st.integers(2, 15),
    mode=st.sampled_from(["haar", "incoherent", "spiked_coordinate"]),
    tail=st.sampled_from(["zero", "constant", "geometric"]),
)
def test_planted_factorization(seed, n, m, mode, tail):
    r = max(1, min(n, m) // 2)
    spec = H.SpectrumSpec(n, m, r, tail_mode=tail)
    A, svd = H.gen_structured_matrix(spec, mode, seed, mu=max(3.0, math.sqrt(n)))
    assert svd.check_invariants(A)["ok"]
    np.testing.assert_allclose(np.linalg.svd(A, compute_uv=False), spec.singular_values(), atol=1e-12)
    fresh = conformal_svd(A, r)
    if spec.gap > 0:
        assert spectral_norm(fresh.U1 @ fresh.U1.T - svd.U1 @ svd.U1.T) <= 1e-10


def test_thin_generation():
    spec = H.SpectrumSpec(40, 30, 2)
    A, svd = H.gen_structured_matrix(spec, "haar", 3, full=False)
    assert svd.U2 is None and svd.U1.shape == (40, 2)
    np.testing.assert_allclose(A, svd.U1 @ np.diag(svd.sigma1) @ svd.V1.T)


def test_spiked_and_incoherent_bases():
    A, svd = H.gen_structured_matrix(H.SpectrumSpec(10, 8, 2), "spiked_coordinate", 0)
    assert two_to_infinity_norm(svd.U1) == 1.0
    rng = np.random.default_rng(0)
    # the flat fallback has row norms up to sqrt(3 / n) when r = 2
    U = H.incoherent_basis(64, 2, 1.25, rng)
    assert two_to_infinity_norm(U) <= 1.25 * math.sqrt(2 / 64) * (1 + 1e-12)
    U = H.incoherent_basis(100, 3, 3.0, rng)
    assert two_to_infinity_norm(U) <= 3.0 * math.sqrt(3 / 100) * (1 + 1e-12)
    with pytest.raises(ValueError):
        H.incoherent_basis(10, 2, 0.5, rng)


def test_sigma_rule():
    assert H.sigma_from_rule(1.0, 100, 400, 0.5) == pytest.approx(0.5 / (21 * 20))
    with pytest.raises(ValueError):
        H.sigma_from_rule(1.0, 10, 10, 1.0)


def _small_identity_cfg(**kw):
    grid = (
        H.GridRow(H.SpectrumSpec(6, 5, 2, (2.0, 1.0), "constant", gap_target=0.3), H.NoiseSpec(relative=0.3)),
        H.GridRow(H.SpectrumSpec(5, 7, 1), H.NoiseSpec("zero")),
    )
    return H.IdentitySuiteConfig(grid=grid, **{"trials": 4, "seed": 11, **kw})


def test_identity_suite_small():
    summary, records = H.run_identity_suite(_small_identity_cfg())
    assert summary.ok and summary.total == 8
    assert all(r.wall_ms == 0.0 for r in records)
    assert summary.max_residuals["exact_y"] <= 1e-12
    zero = [r for r in records if r.row == 1]
    for rec in zero:
        for row in rec.rows:
            if row.bound_name.startswith("exact_"):
                assert row.residual <= 1e-15


def test_identity_suite_timing():
    _, records = H.run_identity_suite(_small_identity_cfg(trials=1, record_timing=True))
    assert all(r.wall_ms > 0 for r in records)


def test_gap_violation_is_skipped():
    bad = H.GridRow(
        H.SpectrumSpec(6, 6, 2, (1.0, 1.0), "constant", gap_target=0.01), H.NoiseSpec(relative=40.0)
    )
    cfg = H.IdentitySuiteConfig(grid=(bad,) + _small_identity_cfg().grid, trials=3, seed=2)
    summary, records = H.run_identity_suite(cfg)
    assert summary.skipped >= 1 and summary.skip_reasons["gap"] == summary.skipped
    assert summary.skipped + summary.passed + summary.failed + summary.errors == summary.total
    assert summary.ok


def test_determinism_and_trial_independence():
    a = H.run_identity_suite(_small_identity_cfg(trials=3))[1]
    b = H.run_identity_suite(_small_identity_cfg(trials=3))[1]
    c = H.run_identity_suite(_small_identity_cfg(trials=5))[1]
    assert [r.rows for r in a] == [r.rows for r in b]
    key = lambda rs: {(r.row, r.trial): (r.seed, r.rows) for r in rs}  # noqa: E731
    kc = key(c)
    for k, v in key(a).items():
        assert kc[k][0] == v[0]
        assert str(kc[k][1]) == str(v[1])


def test_bound_suite_small():
    cfg = H.BoundSuiteConfig(grid=H.default_bound_grid()[:3], trials=2, seed=5)
    summary, records = H.run_bound_suite(cfg)
    assert summary.ok, summary.failures
    names = {row.bound_name for r in records for row in r.rows}
    assert {"wedin", "svt_spectral", "two_inf_decomposition", "weyl"} <= names


def test_classical_suite_small():
    summary, _ = H.run_classical_suite(H.ClassicalSuiteConfig(trials=20, seed=1))
    assert summary.ok and summary.passed == 20


def test_tightness_small():
    res, summary, _ = H.run_tightness_study(H.TightnessConfig(n=10, m=300, trials=5, seed=1))
    assert res.median_bound_ratio > 1 and res.u_tighter_fraction == 1.0
    assert res.v_exceeds_u
    assert summary.extra["trials"] == 5


def test_scaling_small():
    cfg = H.ScalingConfig(n_grid=(60, 120), trials=3, seed=1)
    res, _, _ = H.run_scaling_study(cfg)
    assert res.regressed and res.slope < 0
    with pytest.raises(ValueError):
        H.run_scaling_study(H.ScalingConfig(sigma_frac=1.0))
    res0, _, _ = H.run_scaling_study(H.ScalingConfig(n_grid=(30, 60), trials=2, sigma_frac=0.0))
    assert not res0.regressed and res0.medians == (0.0, 0.0)


def test_fit_loglog_exact():
    xs = np.array([10.0, 20.0, 40.0, 80.0])
    slope, lo, hi, icpt = H.fit_loglog(xs, 3.0 * xs**-0.5)
    assert slope == pytest.approx(-0.5) and lo == pytest.approx(-0.5) and hi == pytest.approx(-0.5)
    assert icpt == pytest.approx(math.log(3.0))


def test_calibration_rules():
    with pytest.raises(ValueError):
        H.calibrate_constants("wedin", H.CalibrationConfig())
    with pytest.raises(ValueError):
        H.calibrate_constants("nope", H.CalibrationConfig())
    res, _, _ = H.calibrate_constants("two_to_infinity", H.CalibrationConfig(n=40, m=40, trials=20, seed=3))
    assert res.feasible and res.dominance >= 0.95
    assert res.c1 in res.grid and res.c2 in res.grid
