"""Seeded random instances and Monte Carlo suites.

Every trial draws from its own generator, derived from the master seed by
counter-splitting on (row, trial). Trials are independent of one another and
of the worker count, so suites are reproducible bit for bit.
"""
from __future__ import annotations

import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats
from scipy.fft import dct

from . import angular, bounds
from .errors import ContractionError, GapViolation, TruncationError
from .linalg import (
    ConformalSVD,
    conformal_svd,
    leading_left_vectors,
    orthonormal_complement,
    sin_theta_equivalents,
    sin_theta_norm,
    spectral_gap_check,
    spectral_norm,
    two_to_infinity_norm,
)

TAIL_MODES = ("zero", "geometric", "constant")
INCOHERENCE_MODES = ("haar", "incoherent", "spiked_coordinate")
NOISE_KINDS = ("gaussian_iid", "zero")
DETERMINISTIC_BOUNDS = (
    "wedin",
    "one_sided_u",
    "one_sided_v",
    "uniform_hat",
    "uf_uniform",
    "uf_one_sided_u",
    "uf_one_sided_v",
    "subspace_spectral",
    "subspace_frobenius",
    "svt_spectral",
    "svt_frobenius",
    "pca_spectral",
    "pca_frobenius",
)
CALIBRATED_BOUNDS = ("two_to_infinity",)


# --- specifications ----------------------------------------------------------


@dataclass(frozen=True)
class SpectrumSpec:
    """Planted singular values: r leading values and a controlled tail.

    ``tail_level`` is the first tail value (default ``sigma_r - gap_target``);
    a geometric tail decays from it by ``tail_ratio`` per index.
    """

    n: int
    m: int
    r: int
    top_values: tuple = ()
    tail_mode: str = "zero"
    gap_target: float | None = None
    tail_level: float | None = None
    tail_ratio: float = 0.5

    def __post_init__(self):
        k = min(self.n, self.m)
        if not (1 <= self.r <= k):
            raise ValueError(f"r={self.r} outside [1, {k}]")
        if self.tail_mode not in TAIL_MODES:
            raise ValueError(f"tail_mode must be one of {TAIL_MODES}, got {self.tail_mode!r}")
        top = self.top_values or (tuple(np.linspace(2.0, 1.0, self.r)) if self.r > 1 else (1.0,))
        top = tuple(float(v) for v in top)
        object.__setattr__(self, "top_values", top)
        if len(top) != self.r:
            raise ValueError(f"need {self.r} top values, got {len(top)}")
        if any(v <= 0 for v in top) or any(a < b for a, b in zip(top, top[1:])):
            raise ValueError("top values must be positive and non-increasing")
        if not 0 < self.tail_ratio <= 1:
            raise ValueError("tail_ratio must lie in (0, 1]")
        if self.gap_target is not None and self.gap_target < 0:
            raise ValueError("gap_target must be non-negative")
        lvl = self.level
        if lvl < 0:
            raise ValueError("tail level is negative; lower gap_target")
        if self.tail_mode != "zero" and self.gap_target is not None and top[-1] - lvl < self.gap_target - 1e-15:
            raise ValueError("tail level leaves a gap below gap_target")

    @property
    def level(self):
        if self.tail_mode == "zero":
            return 0.0
        if self.tail_level is not None:
            return float(self.tail_level)
        gap = self.gap_target if self.gap_target is not None else 0.5 * self.top_values[-1]
        return self.top_values[-1] - gap

    def singular_values(self):
        k = min(self.n, self.m)
        tail = np.zeros(k - self.r)
        if self.tail_mode == "constant":
            tail[:] = self.level
        elif self.tail_mode == "geometric":
            tail = self.level * self.tail_ratio ** np.arange(k - self.r)
        return np.concatenate([np.asarray(self.top_values), tail])

    @property
    def gap(self):
        s = self.singular_values()
        return float(s[self.r - 1] - (s[self.r] if self.r < len(s) else 0.0))


@dataclass(frozen=True)
class NoiseSpec:
    """i.i.d. Gaussian noise with entry scale ``sigma``.

    ``relative`` instead rescales the draw to spectral norm ``relative * gap``;
    kind ``zero`` gives an all-zero perturbation.
    """

    kind: str = "gaussian_iid"
    sigma: float | None = None
    relative: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}")
        if self.kind == "gaussian_iid":
            if (self.sigma is None) == (self.relative is None):
                raise ValueError("gaussian noise needs exactly one of sigma, relative")
            if self.sigma is not None and not self.sigma > 0:
                raise ValueError("sigma must be positive")
            if self.relative is not None and not self.relative > 0:
                raise ValueError("relative noise level must be positive")

    @property
    def level(self):
        if self.kind == "zero":
            return 0.0
        return self.sigma if self.sigma is not None else self.relative


@dataclass(frozen=True)
class GridRow:
    spectrum: SpectrumSpec
    noise: NoiseSpec
    incoherence: str = "haar"
    mu: float | None = None


def trial_rng(master_seed, row, trial):
    """Generator for one trial, derived by counter-splitting the master seed."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(row), int(trial)))
    seed64 = int(ss.generate_state(1, np.uint64)[0])
    return np.random.default_rng(ss), seed64


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# --- generators --------------------------------------------------------------


def haar_orthogonal(n, k, rng):
    """First k columns of a Haar-distributed n x n orthogonal matrix."""
    G = rng.standard_normal((n, k))
    Q, R = np.linalg.qr(G)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def _flat_basis(n, r, rng):
    # orthonormal DCT columns with random row signs: row norms at most sqrt(2r/n)
    C = dct(np.eye(n), norm="ortho", axis=0).T
    signs = rng.choice([-1.0, 1.0], size=n)
    return C[:, :r] * signs[:, None]


def incoherent_basis(n, r, mu, rng, full=False, tries=50):
    """n x r (or n x n) orthonormal basis whose leading r columns satisfy
    ||U1||_{2,inf} <= mu * sqrt(r / n)."""
    if mu < 1:
        raise ValueError(f"incoherence mu must be >= 1, got {mu}")
    cap = mu * math.sqrt(r / n) * (1 + 1e-12)
    k = n if full else r
    for _ in range(tries):
        U = haar_orthogonal(n, k, rng)
        if two_to_infinity_norm(U[:, :r]) <= cap:
            return U
    U1 = _flat_basis(n, r, rng)
    if two_to_infinity_norm(U1) > cap:
        raise ValueError(f"could not construct a {mu}-incoherent basis for n={n}, r={r}")
    if full:
        return np.hstack([U1, orthonormal_complement(U1)])
    return U1


def _left_basis(n, r, mode, mu, rng, full):
    if mode == "haar":
        return haar_orthogonal(n, n if full else r, rng)
    if mode == "incoherent":
        return incoherent_basis(n, r, 3.0 if mu is None else mu, rng, full=full)
    if mode == "spiked_coordinate":
        return np.eye(n)[:, : (n if full else r)]
    raise ValueError(f"incoherence mode must be one of {INCOHERENCE_MODES}")


class Planted(NamedTuple):
    A: np.ndarray
    svd: ConformalSVD


def gen_structured_matrix(spec, incoherence_mode="haar", seed=None, mu=None, full=True):
    """A = U diag(sigma) V^T with a planted, exactly known factorization.

    With ``full=False`` and a zero tail only the leading blocks are drawn,
    which is much cheaper for large n.
    """
    rng = _as_rng(seed)
    n, m, r = spec.n, spec.m, spec.r
    s = spec.singular_values()
    k = len(s)
    thin = not full and spec.tail_mode == "zero"
    U = _left_basis(n, r, incoherence_mode, mu, rng, full=not thin)
    V = haar_orthogonal(m, r if thin else m, rng)
    if thin:
        A = (U * s[:r]) @ V.T
        svd = ConformalSVD(r, U, None, V, None, s[:r].copy(), s[r:].copy())
    else:
        A = (U[:, :k] * s) @ V[:, :k].T
        svd = ConformalSVD(r, U[:, :r], U[:, r:], V[:, :r], V[:, r:], s[:r].copy(), s[r:].copy())
    return Planted(A, svd)


def gen_noise(spec, n, m, seed=None, gap=None):
    """Seeded noise matrix following ``spec``."""
    if spec.kind == "zero":
        return np.zeros((n, m))
    rng = _as_rng(spec.seed if seed is None else seed)
    G = rng.standard_normal((n, m))
    if spec.sigma is not None:
        return spec.sigma * G
    if gap is None:
        raise ValueError("relative noise needs the spectral gap")
    return G * (spec.relative * gap / spectral_norm(G))


def sigma_from_rule(gap, n, m, frac=0.5):
    """Noise level frac * gap / (21 sqrt(max(n, m))); frac < 1 keeps the premise."""
    if not 0 <= frac < 1:
        raise ValueError("sigma_rule fraction must lie in [0, 1)")
    return frac * gap / (21.0 * math.sqrt(max(n, m)))


# --- records -----------------------------------------------------------------


class CsvRow(NamedTuple):
    bound_name: str
    bound: float
    measured: float
    dominated: bool
    assumptions_met: bool
    residual: float


@dataclass
class TrialRecord:
    seed: int
    n: int
    m: int
    r: int
    sigma: float
    row: int
    trial: int
    status: str = "ok"  # ok | failed | skipped | error
    reason: str = ""
    rows: list = field(default_factory=list)
    wall_ms: float = 0.0
    extra: dict = field(default_factory=dict)


@dataclass
class SuiteSummary:
    name: str
    total: int = 0
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    errors: int = 0
    skip_reasons: Counter = field(default_factory=Counter)
    max_residuals: dict = field(default_factory=dict)
    rates: dict = field(default_factory=dict)  # name -> [hits, count]
    failures: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.failed == 0 and self.errors == 0 and self.total == self.passed + self.skipped

    def rate(self, name):
        hits, count = self.rates.get(name, (0, 0))
        return hits / count if count else float("nan")


def summarize(name, records, hard=lambda row: True):
    """Fold trial records into a summary; rows with ``hard(row)`` decide pass/fail."""
    out = SuiteSummary(name)
    for rec in records:
        out.total += 1
        if rec.status == "skipped":
            out.skipped += 1
            out.skip_reasons[rec.reason] += 1
            continue
        if rec.status == "error":
            out.errors += 1
            out.failures.append((rec.seed, rec.row, rec.trial, rec.reason))
            continue
        bad = []
        for row in rec.rows:
            if row.assumptions_met:
                hc = out.rates.setdefault(row.bound_name, [0, 0])
                hc[0] += int(row.dominated)
                hc[1] += 1
                if np.isfinite(row.residual):
                    prev = out.max_residuals.get(row.bound_name, 0.0)
                    out.max_residuals[row.bound_name] = max(prev, row.residual)
                if hard(row) and not row.dominated:
                    bad.append(row.bound_name)
        if bad:
            out.failed += 1
            out.failures.append((rec.seed, rec.row, rec.trial, ",".join(bad)))
        else:
            out.passed += 1
    return out


def _map(fn, tasks, workers):
    if workers is None or workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _timed(fn, task, record_timing):
    t0 = time.perf_counter()
    rec = fn(task)
    if record_timing:
        rec.wall_ms = (time.perf_counter() - t0) * 1e3
    return rec


# --- identity suite ----------------------------------------------------------


@dataclass(frozen=True)
class IdentitySuiteConfig:
    grid: tuple
    trials: int = 50
    seed: int = 0
    workers: int = 1
    tol_base: float = 1e-9
    series_tol: float = 1e-10
    series_cert_max: float = 0.9
    series_kmax: int = 5000
    record_timing: bool = False


def default_identity_grid():
    """24 rows, n, m <= 100, gaps from 0.1 to 1 times sigma_r, noise up to half the gap."""
    shapes = [(6, 5), (5, 8), (12, 12), (20, 9), (9, 30), (40, 25), (60, 60), (100, 70)]
    tails = [("zero", None), ("constant", 0.1), ("geometric", 0.3), ("constant", 0.5), ("geometric", 0.1)]
    noises = [0.5, 0.05, 0.3, 0.2, 0.01, 0.45]
    rows = []
    for i in range(24):
        n, m = shapes[i % len(shapes)]
        r = 1 + (i % min(4, min(n, m) - 1))
        tail, gfrac = tails[i % len(tails)]
        top = tuple(np.linspace(3.0, 1.0, r)) if r > 1 else (1.0,)
        gap = None if gfrac is None else gfrac * top[-1]
        spec = SpectrumSpec(n, m, r, top, tail, gap_target=gap, tail_ratio=0.7)
        rows.append(GridRow(spec, NoiseSpec(relative=noises[i % len(noises)])))
    return tuple(rows)


def _identity_trial(task):
    cfg, row_idx, trial = task
    row = cfg.grid[row_idx]
    spec = row.spectrum
    rng, seed64 = trial_rng(cfg.seed, row_idx, trial)
    rec = TrialRecord(seed64, spec.n, spec.m, spec.r, row.noise.level, row_idx, trial)
    planted = gen_structured_matrix(spec, row.incoherence, rng, mu=row.mu)
    A = planted.A
    dA = gen_noise(row.noise, spec.n, spec.m, rng, gap=spec.gap)
    svdA = conformal_svd(A, spec.r)
    svdB = conformal_svd(A + dA, spec.r)
    gaps = spectral_gap_check(svdA, svdB)
    if not gaps.ok:
        rec.status, rec.reason = "skipped", "gap"
        return rec
    try:
        rec.rows.extend(identity_checks(svdA, svdB, dA, cfg, rng))
    except (GapViolation, ArithmeticError, ValueError) as exc:
        rec.status, rec.reason = "error", f"{type(exc).__name__}: {exc}"
    return rec


def identity_checks(svdA, svdB, dA, cfg, rng):
    """All identity checks for one instance, as CSV rows."""
    rows = []
    tol = angular.identity_tolerance(svdA, svdB, cfg.tol_base)
    direct = angular.direct_cross_terms(svdA, svdB)
    exact = angular.exact_cross_terms(svdA, svdB, dA)
    for name, e, d in zip("xywz", exact, direct):
        res = float(np.max(np.abs(e - d), initial=0.0))
        rows.append(CsvRow(f"exact_{name}", tol, res, res <= tol, True, res))

    # norm consistency with the sin theta distance
    s_u = sin_theta_norm(svdA.U1, svdB.U1)
    res = abs(spectral_norm(exact.y) - s_u)
    rows.append(CsvRow("norm_y_sin_u", 1e-10, res, res <= 1e-10, True, res))

    for side in ("U", "V"):
        eq = sin_theta_equivalents(svdA, svdB, side)
        lim = 1e-10 * max(1.0, max(eq))
        rows.append(CsvRow(f"equivalents_{side}", lim, eq.spread(), eq.spread() <= lim, True, eq.spread()))

    kF, kG = angular.series_contractions(svdA, svdB, dA)
    cert_ok = max(kF, kG) < cfg.series_cert_max
    if cert_ok:
        ser = angular.series_cross_terms(svdA, svdB, dA, tol=cfg.series_tol, k_max=cfg.series_kmax)
        lim = cfg.series_tol + tol
        res = ser.cross.max_abs_diff(direct)
        rows.append(CsvRow("series", lim, res, res <= lim, True, res))
        for label, diag in (("series_decay_yz", ser.yz), ("series_decay_xw", ser.xw)):
            worst = _worst_ratio(diag.term_norms)
            lim = diag.contraction + 1e-6
            rows.append(CsvRow(label, lim, worst, worst <= lim, True, worst))
    else:
        rows.append(CsvRow("series", cfg.series_tol, math.nan, True, False, math.nan))

    if bounds.is_low_rank(svdA):
        lam = spectral_norm(angular.alpha_blocks(dA, svdA).a22) / svdB.sv(svdB.r)
        if lam < cfg.series_cert_max:
            (y, z), diag = angular.low_rank_series_cross_terms(
                svdA, svdB, dA, tol=cfg.series_tol, k_max=cfg.series_kmax
            )
            lim = cfg.series_tol + tol
            res = max(float(np.max(np.abs(y - direct.y), initial=0.0)), float(np.max(np.abs(z - direct.z), initial=0.0)))
            rows.append(CsvRow("low_rank_series", lim, res, res <= lim, True, res))
            worst = _worst_ratio(diag.term_norms)
            rows.append(CsvRow("low_rank_decay", lam**2 + 1e-6, worst, worst <= lam**2 + 1e-6, True, worst))

    rows.extend(hadamard_checks(svdA, svdB, rng))
    return rows


def _worst_ratio(norms):
    worst = 0.0
    for a, b in zip(norms, norms[1:]):
        if a > 0:
            worst = max(worst, b / a)
    return worst


def hadamard_checks(svdA, svdB, rng):
    """Random-H dominance (both norms) and witness equality for B1..B4."""
    rows = []
    n, m, r = svdA.n, svdA.m, svdA.r
    for which in ("B1", "B2", "B3", "B4"):
        shape = angular._h_shape(which, svdA)
        if 0 in shape:
            continue
        H = rng.standard_normal(shape)
        for p, tag in ((np.inf, "spec"), (2, "frob")):
            chk = angular.hadamard_bound_check(H, which, svdA, svdB, p)
            rows.append(CsvRow(f"hadamard_{which}_{tag}", chk.rhs, chk.lhs, chk.dominated, True, math.nan))
        Hw = angular.tightness_witness(which, shape, 1.0)
        chk = angular.hadamard_bound_check(Hw, which, svdA, svdB, np.inf)
        res = abs(chk.lhs - chk.rhs) / max(chk.rhs, np.finfo(float).tiny) if chk.rhs > 0 else chk.lhs
        rows.append(CsvRow(f"witness_{which}", 1e-12, res, res <= 1e-12, True, res))
    return rows


def _identity_hard(row):
    return True


def run_identity_suite(cfg):
    tasks = [(cfg, i, t) for i in range(len(cfg.grid)) for t in range(cfg.trials)]
    records = _map(_identity_task, [(cfg.record_timing, t) for t in tasks], cfg.workers)
    return summarize("identity", records, _identity_hard), records


def _identity_task(arg):
    record_timing, task = arg
    return _timed(_identity_trial, task, record_timing)


# --- bound suite -------------------------------------------------------------


@dataclass(frozen=True)
class BoundSuiteConfig:
    grid: tuple
    trials: int = 25
    seed: int = 0
    workers: int = 1
    c1: float = 1.0
    c2: float = 1.0
    identity_tol: float = 1e-10
    reduction_tol: float = 1e-12
    families: tuple = ("sin", "subspace", "svt", "pca", "two_inf", "classical")
    record_timing: bool = False


def default_bound_grid():
    """Rank-r and full-rank rows, square and rectangular, mild to heavy noise."""
    rows = []
    shapes = [(30, 30), (20, 60), (60, 20), (40, 40), (25, 80), (50, 35), (12, 12), (45, 45)]
    tails = ["zero", "geometric", "constant", "zero", "geometric", "constant", "zero", "geometric"]
    noise = [0.02, 0.05, 0.1, 0.005, 0.03, 0.2, 0.6, 0.01]
    for i, ((n, m), tail, s) in enumerate(zip(shapes, tails, noise)):
        r = 1 + i % 3
        top = tuple(np.linspace(4.0, 2.0, r)) if r > 1 else (2.0,)
        spec = SpectrumSpec(n, m, r, top, tail, gap_target=1.0, tail_ratio=0.8)
        rows.append(GridRow(spec, NoiseSpec(sigma=s)))
    return tuple(rows)


def bound_reports(svdA, svdB, dA, A, sigma_noise, families, c1=1.0, c2=1.0):
    out = []
    if "sin" in families:
        out.append(bounds.wedin_bound(svdA, svdB, dA))
        out.extend(bounds.one_sided_sin_theta_bounds(svdA, svdB, dA))
        out.extend(bounds.user_friendly_one_sided_bounds(svdA, dA, svdB))
    if "subspace" in families:
        out.extend(bounds.subspace_projection_bound(A, svdA.r, svdB.V1, svdA))
    if "svt" in families:
        out.extend(bounds.svt_bounds(svdA, svdB, dA))
    if "pca" in families:
        out.extend(bounds.pca_bounds(svdA, svdB, dA))
    if "two_inf" in families and sigma_noise > 0:
        out.append(bounds.two_to_infinity_bound(svdA, svdB, dA, sigma_noise, c1, c2))
    return out


def identity_rows_for_bounds(svdA, svdB, dA, A, cfg):
    """Exact identities used inside the proofs, and the low-rank reductions."""
    rows = []
    tol = cfg.identity_tol
    fam = cfg.families
    if "svt" in fam or "pca" in fam:
        res = bounds.svt_decomposition_identity(svdA, svdB, dA)
        rows.append(CsvRow("svt_decomposition", tol, res, res <= tol, True, res))
    if "two_inf" in fam or "sin" in fam:
        dec = bounds.two_to_infinity_decomposition(svdA, svdB, dA)
        rows.append(CsvRow("two_inf_decomposition", tol, dec.residual, dec.residual <= tol, True, dec.residual))
        rot = dec.rotation
        rows.append(CsvRow("s_minus_identity", rot.sin_theta_sq, rot.s_minus_identity, rot.s_bound_holds, True, math.nan))
    if "pca" in fam:
        res = bounds.sqrt_rotation_factor(svdB.V1.T @ svdA.V1)
        rows.append(CsvRow("sqrt_rotation", tol, res, res <= tol, True, res))
    if bounds.is_low_rank(svdA) and ("svt" in fam or "pca" in fam):
        spec, frob, k = bounds.svt_bound_values(svdA, dA)
        pspec = 3.0 * k.norm_E + 3.0 * k.s_next * k.t
        pfrob = frob + k.Er_F + k.S2r_F * k.t
        targets = (
            ("svt_spectral_reduction", spec, 2.0 * k.norm_E),
            ("svt_frobenius_reduction", frob, math.sqrt(5.0) * k.Er_F),
            ("pca_spectral_reduction", pspec, 3.0 * k.norm_E),
            ("pca_frobenius_reduction", pfrob, (math.sqrt(5.0) + 1.0) * k.Er_F),
        )
        for name, got, want in targets:
            res = abs(got - want) / max(abs(want), np.finfo(float).tiny)
            rows.append(CsvRow(name, cfg.reduction_tol, res, res <= cfg.reduction_tol, True, res))
    if "classical" in fam:
        chk = bounds.classical_inequality_checks(A, dA, svdA.r)
        rows.append(CsvRow("weyl", 0.0, chk.weyl_margin, chk.weyl_ok, True, math.nan))
        rows.append(CsvRow("thompson", 0.0, chk.thompson_margin, chk.thompson_ok, True, math.nan))
        rows.append(CsvRow("power_sum", 0.0, chk.power_sum_margin, chk.power_sum_ok, True, math.nan))
    return rows


def _bound_trial(task):
    cfg, row_idx, trial = task
    row = cfg.grid[row_idx]
    spec = row.spectrum
    rng, seed64 = trial_rng(cfg.seed, row_idx, trial)
    rec = TrialRecord(seed64, spec.n, spec.m, spec.r, row.noise.level, row_idx, trial)
    A = gen_structured_matrix(spec, row.incoherence, rng, mu=row.mu).A
    dA = gen_noise(row.noise, spec.n, spec.m, rng, gap=spec.gap)
    svdA = conformal_svd(A, spec.r)
    svdB = conformal_svd(A + dA, spec.r)
    sigma_noise = row.noise.sigma or 0.0
    try:
        for rep in bound_reports(svdA, svdB, dA, A, sigma_noise, cfg.families, cfg.c1, cfg.c2):
            rec.rows.append(CsvRow(rep.name, rep.bound, rep.measured, rep.dominated, rep.assumptions_met, math.nan))
        rec.rows.extend(identity_rows_for_bounds(svdA, svdB, dA, A, cfg))
    except (ArithmeticError, ValueError) as exc:
        rec.status, rec.reason = "error", f"{type(exc).__name__}: {exc}"
    return rec


def _bound_hard(row):
    return row.bound_name not in CALIBRATED_BOUNDS


def _bound_task(arg):
    record_timing, task = arg
    return _timed(_bound_trial, task, record_timing)


def run_bound_suite(cfg):
    tasks = [(cfg, i, t) for i in range(len(cfg.grid)) for t in range(cfg.trials)]
    records = _map(_bound_task, [(cfg.record_timing, t) for t in tasks], cfg.workers)
    return summarize("bounds", records, _bound_hard), records


@dataclass(frozen=True)
class ClassicalSuiteConfig:
    trials: int = 500
    n: int = 10
    m: int = 10
    seed: int = 0
    workers: int = 1


def _classical_trial(task):
    cfg, trial = task
    rng, seed64 = trial_rng(cfg.seed, 0, trial)
    A = rng.standard_normal((cfg.n, cfg.m)) * rng.uniform(0.1, 10.0)
    E = rng.standard_normal((cfg.n, cfg.m)) * rng.uniform(0.001, 5.0)
    rec = TrialRecord(seed64, cfg.n, cfg.m, 0, 0.0, 0, trial)
    chk = bounds.classical_inequality_checks(A, E)
    rec.rows = [
        CsvRow("weyl", 0.0, chk.weyl_margin, chk.weyl_ok, True, math.nan),
        CsvRow("thompson", 0.0, chk.thompson_margin, chk.thompson_ok, True, math.nan),
        CsvRow("power_sum", 0.0, chk.power_sum_margin, chk.power_sum_ok, True, math.nan),
    ]
    return rec


def run_classical_suite(cfg):
    records = _map(_classical_trial, [(cfg, t) for t in range(cfg.trials)], cfg.workers)
    return summarize("classical", records), records


# --- tightness study ---------------------------------------------------------


@dataclass(frozen=True)
class TightnessConfig:
    n: int = 50
    m: int = 2000
    r: int = 2
    sigma: float | None = None  # default gap / (42 sqrt(m))
    trials: int = 100
    seed: int = 0
    workers: int = 1
    top_values: tuple = ()
    record_timing: bool = False


class TightnessResult(NamedTuple):
    median_bound_ratio: float
    median_measured_ratio: float
    u_tighter_fraction: float
    v_exceeds_u: bool
    sigma: float
    trials: int


def _tightness_spec(cfg):
    return SpectrumSpec(cfg.n, cfg.m, cfg.r, cfg.top_values, "zero")


def tightness_sigma(cfg):
    if cfg.sigma is not None:
        return cfg.sigma
    return _tightness_spec(cfg).gap / (42.0 * math.sqrt(max(cfg.n, cfg.m)))


def _tightness_trial(task):
    cfg, trial = task
    spec = _tightness_spec(cfg)
    sigma = tightness_sigma(cfg)
    rng, seed64 = trial_rng(cfg.seed, 0, trial)
    rec = TrialRecord(seed64, cfg.n, cfg.m, cfg.r, sigma, 0, trial)
    A = gen_structured_matrix(spec, "haar", rng, full=False).A
    dA = gen_noise(NoiseSpec(sigma=sigma), cfg.n, cfg.m, rng) if sigma > 0 else np.zeros_like(A)
    svdA = conformal_svd(A, cfg.r, full=False)
    svdB = conformal_svd(A + dA, cfg.r, full=False)
    wedin = bounds.wedin_bound(svdA, svdB, dA)
    one_u, one_v, uni = bounds.one_sided_sin_theta_bounds(svdA, svdB, dA)
    for rep in (wedin, one_u, one_v, uni):
        rec.rows.append(CsvRow(rep.name, rep.bound, rep.measured, rep.dominated, rep.assumptions_met, math.nan))
    rec.extra = dict(
        sin_u=one_u.measured,
        sin_v=one_v.measured,
        bound_u=one_u.bound,
        bound_sym=wedin.bound,
    )
    return rec


def _tightness_task(arg):
    record_timing, task = arg
    return _timed(_tightness_trial, task, record_timing)


def run_tightness_study(cfg):
    tasks = [(cfg, t) for t in range(cfg.trials)]
    records = _map(_tightness_task, [(cfg.record_timing, t) for t in tasks], cfg.workers)
    sin_u = np.array([r.extra["sin_u"] for r in records])
    sin_v = np.array([r.extra["sin_v"] for r in records])
    b_u = np.array([r.extra["bound_u"] for r in records])
    b_sym = np.array([r.extra["bound_sym"] for r in records])
    with np.errstate(divide="ignore", invalid="ignore"):
        meas_ratio = float(np.median(sin_v / sin_u)) if np.all(sin_u > 0) else math.nan
        bound_ratio = float(np.median(b_sym / b_u)) if np.all(b_u > 0) else math.nan
    res = TightnessResult(
        median_bound_ratio=bound_ratio,
        median_measured_ratio=meas_ratio,
        u_tighter_fraction=float(np.mean(b_u < b_sym)),
        v_exceeds_u=bool(np.median(sin_v) > np.median(sin_u)),
        sigma=tightness_sigma(cfg),
        trials=cfg.trials,
    )
    summary = summarize("tightness", records)
    summary.extra.update(res._asdict())
    return res, summary, records


# --- scaling study -----------------------------------------------------------


@dataclass(frozen=True)
class ScalingConfig:
    r: int = 2
    mu: float = 3.0
    sigma_frac: float = 0.5
    n_grid: tuple = (200, 400, 800, 1600)
    trials: int = 50
    seed: int = 0
    workers: int = 1
    incoherence: str = "incoherent"
    tail_mode: str = "zero"
    top_values: tuple = (2.0, 1.5)
    gap: float = 1.0
    record_timing: bool = False


class ScalingResult(NamedTuple):
    n_grid: tuple
    medians: tuple
    slope: float
    ci_low: float
    ci_high: float
    intercept: float
    regressed: bool


def _scaling_spec(cfg, n):
    level = cfg.top_values[-1] - cfg.gap
    if cfg.tail_mode == "geometric":
        # decays from level to level / 10 across the tail
        ratio = 0.1 ** (1.0 / max(1, n - cfg.r - 1))
        return SpectrumSpec(n, n, cfg.r, cfg.top_values, "geometric", gap_target=cfg.gap, tail_level=level, tail_ratio=ratio)
    return SpectrumSpec(n, n, cfg.r, cfg.top_values, cfg.tail_mode, gap_target=cfg.gap, tail_level=level if cfg.tail_mode != "zero" else None)


def _scaling_trial(task):
    cfg, row_idx, trial = task
    n = cfg.n_grid[row_idx]
    spec = _scaling_spec(cfg, n)
    sigma = sigma_from_rule(spec.gap, n, n, cfg.sigma_frac)
    rng, seed64 = trial_rng(cfg.seed, row_idx, trial)
    rec = TrialRecord(seed64, n, n, cfg.r, sigma, row_idx, trial)
    planted = gen_structured_matrix(spec, cfg.incoherence, rng, mu=cfg.mu, full=False)
    A, svdA = planted
    if sigma > 0:
        dA = gen_noise(NoiseSpec(sigma=sigma), n, n, rng)
        Ut1, _ = leading_left_vectors(A + dA, cfg.r)
        Q1, _, Q2t = np.linalg.svd(svdA.U1.T @ Ut1)
        err = two_to_infinity_norm(Ut1 - svdA.U1 @ (Q1 @ Q2t))
    else:
        err = 0.0
    low_rank = spec.tail_mode == "zero"
    R = bounds.r_factor(cfg.r, n, low_rank)
    rec.rows.append(CsvRow("two_inf_error", sigma * R / spec.gap, err, True, True, math.nan))
    rec.extra = dict(err=err)
    return rec


def _scaling_task(arg):
    record_timing, task = arg
    return _timed(_scaling_trial, task, record_timing)


def fit_loglog(xs, ys, level=0.95):
    """Least-squares slope of log y on log x with a t-based confidence interval."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    fit = stats.linregress(lx, ly)
    df = len(xs) - 2
    half = stats.t.ppf(0.5 + level / 2, df) * fit.stderr if df > 0 else math.inf
    return float(fit.slope), float(fit.slope - half), float(fit.slope + half), float(fit.intercept)


def run_scaling_study(cfg):
    if cfg.sigma_frac >= 1 or cfg.sigma_frac < 0:
        raise ValueError("sigma_rule fraction must lie in [0, 1) to keep 21 sigma sqrt(n) < gap")
    tasks = [(cfg, i, t) for i in range(len(cfg.n_grid)) for t in range(cfg.trials)]
    records = _map(_scaling_task, [(cfg.record_timing, t) for t in tasks], cfg.workers)
    medians = []
    for i in range(len(cfg.n_grid)):
        errs = [rec.extra["err"] for rec in records if rec.row == i]
        medians.append(float(np.median(errs)))
    if cfg.sigma_frac == 0 or len(cfg.n_grid) < 2 or min(medians) <= 0:
        res = ScalingResult(tuple(cfg.n_grid), tuple(medians), math.nan, math.nan, math.nan, math.nan, False)
    else:
        slope, lo, hi, icpt = fit_loglog(cfg.n_grid, medians)
        res = ScalingResult(tuple(cfg.n_grid), tuple(medians), slope, lo, hi, icpt, True)
    summary = summarize("scaling", records)
    summary.extra.update(res._asdict())
    return res, summary, records


# --- constant calibration ----------------------------------------------------


@dataclass(frozen=True)
class CalibrationConfig:
    n: int = 200
    m: int = 200
    r: int = 1
    trials: int = 200
    seed: int = 0
    workers: int = 1
    target: float = 0.95
    sigma_frac: float = 0.5
    tail_mode: str = "zero"
    top_values: tuple = (2.0,)
    gap: float = 1.0
    incoherence: str = "haar"
    mu: float | None = None
    grid: tuple = tuple(2.0**k for k in range(-8, 9))
    record_timing: bool = False


class CalibrationResult(NamedTuple):
    bound_id: str
    c1: float
    c2: float
    feasible: bool
    dominance: float
    target: float
    grid: tuple
    seed: int


def _calibration_spec(cfg):
    level = cfg.top_values[-1] - cfg.gap
    if cfg.tail_mode == "zero":
        return SpectrumSpec(cfg.n, cfg.m, cfg.r, cfg.top_values, "zero")
    return SpectrumSpec(cfg.n, cfg.m, cfg.r, cfg.top_values, cfg.tail_mode, gap_target=cfg.gap, tail_level=level, tail_ratio=0.99)


def _calibration_trial(task):
    cfg, trial = task
    spec = _calibration_spec(cfg)
    sigma = sigma_from_rule(spec.gap, cfg.n, cfg.m, cfg.sigma_frac)
    rng, seed64 = trial_rng(cfg.seed, 0, trial)
    rec = TrialRecord(seed64, cfg.n, cfg.m, cfg.r, sigma, 0, trial)
    A, svdA = gen_structured_matrix(spec, cfg.incoherence, rng, mu=cfg.mu)
    dA = gen_noise(NoiseSpec(sigma=sigma), cfg.n, cfg.m, rng)
    svdB = conformal_svd(A + dA, cfg.r, full=False)
    rep = bounds.two_to_infinity_bound(svdA, svdB, dA, sigma, 1.0, 1.0, low_rank=spec.tail_mode == "zero")
    md = rep.metadata
    rec.rows.append(CsvRow(rep.name, rep.bound, rep.measured, rep.dominated, rep.assumptions_met, math.nan))
    rec.extra = dict(
        t1=md["term1"], t2=md["term2"], rot=md["component_rotation"], lin=md["component_linear"],
        measured=rep.measured, ok=rep.assumptions_met,
    )
    return rec


def _calibration_task(arg):
    record_timing, task = arg
    return _timed(_calibration_trial, task, record_timing)


def _smallest(grid, ratio_ok, target):
    for c in sorted(grid):
        if ratio_ok(c) >= target:
            return c
    return None


def calibrate_constants(bound_id, cfg):
    """Smallest grid constants (c1, c2) with empirical dominance >= target.

    Each constant is fitted to its own component of the error decomposition at
    level 1 - (1 - target) / 2, so the sum bound reaches ``target`` by a union
    bound; the joint rate is reported as measured.
    """
    if bound_id in DETERMINISTIC_BOUNDS:
        raise ValueError(f"{bound_id} is a deterministic bound with no free constants")
    if bound_id not in CALIBRATED_BOUNDS:
        raise ValueError(f"unknown bound {bound_id!r}")
    tasks = [(cfg, t) for t in range(cfg.trials)]
    records = _map(_calibration_task, [(cfg.record_timing, t) for t in tasks], cfg.workers)
    ex = [r.extra for r in records if r.extra["ok"]]
    if not ex:
        raise ValueError("no trial satisfied the noise premise")
    t1 = np.array([e["t1"] for e in ex])
    t2 = np.array([e["t2"] for e in ex])
    rot = np.array([e["rot"] for e in ex])
    lin = np.array([e["lin"] for e in ex])
    meas = np.array([e["measured"] for e in ex])
    comp_target = 1.0 - (1.0 - cfg.target) / 2.0
    c1 = _smallest(cfg.grid, lambda c: np.mean(rot <= c * t1), comp_target)
    c2 = _smallest(cfg.grid, lambda c: np.mean(lin <= c * t2), comp_target)
    feasible = c1 is not None and c2 is not None
    dom = float(np.mean(meas <= c1 * t1 + c2 * t2)) if feasible else math.nan
    res = CalibrationResult(
        bound_id,
        math.nan if c1 is None else c1,
        math.nan if c2 is None else c2,
        feasible and dom >= cfg.target,
        dom,
        cfg.target,
        tuple(cfg.grid),
        cfg.seed,
    )
    summary = summarize("calibrate", records, hard=lambda row: False)
    summary.extra.update(res._asdict())
    return res, summary, records


def config_dict(cfg):
    """Plain-dict view of a suite config for provenance echoes."""
    return asdict(cfg)
