"""Perturbation bounds derived from the angular formulae.

Every calculator returns ``BoundReport`` objects pairing a bound with the
quantity it controls. Violated premises are flagged through
``assumptions_met`` instead of raising, so sweeps can chart where a bound
stops applying.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh

from .angular import alpha_blocks
from .errors import DimensionError, GapViolation
from .linalg import (
    ConformalSVD,
    as_matrix,
    conformal_svd,
    frobenius_norm,
    orthonormal_complement,
    sin_theta_norm,
    spectral_norm,
    svd_truncate,
    top_frobenius,
    two_to_infinity_norm,
)

REL_SLACK = 1e-10
ABS_SLACK = 1e-12
RANK_TOL = 1e-10


@dataclass
class BoundReport:
    name: str
    bound: float
    measured: float
    dominated: bool
    assumptions_met: bool
    metadata: dict = field(default_factory=dict)

    @property
    def ratio(self):
        if self.bound == 0:
            return 0.0 if self.measured == 0 else math.inf
        return self.measured / self.bound


def _report(name, bound, measured, assumptions_met=True, scale=1.0, **meta):
    bound = float(bound)
    measured = float(measured)
    # absolute floor absorbs rounding when the bound itself is 0
    ok = measured <= bound * (1.0 + REL_SLACK) + ABS_SLACK * max(1.0, scale)
    return BoundReport(name, bound, measured, bool(ok), bool(assumptions_met), meta)


def _check_dA(dA, svdA):
    dA = as_matrix(dA, "dA")
    if dA.shape != (svdA.n, svdA.m):
        raise DimensionError(f"dA has shape {dA.shape}, expected {(svdA.n, svdA.m)}")
    return dA


def _sines(svdA, svdB, p=np.inf):
    return (
        sin_theta_norm(svdA.U1, svdB.U1, p),
        sin_theta_norm(svdA.V1, svdB.V1, p),
    )


def _sin_scale(svdA):
    gap = svdA.sigma_r - svdA.sigma_next
    return svdA.sv(1) / gap if gap > 0 else 1.0


def uniform_clamp(norm_E, gap):
    """min{2||E|| / gap, 1}, equal to 1 when the gap is not positive."""
    if gap <= 0:
        return 1.0
    return min(2.0 * norm_E / gap, 1.0)


# --- sin Theta bounds --------------------------------------------------------


def wedin_bound(svdA, svdB, dA):
    dA = _check_dA(dA, svdA)
    r = svdA.r
    delta = svdB.sv(r) - svdA.sv(r + 1)
    num = max(spectral_norm(dA @ svdB.V1), spectral_norm(svdB.U1.T @ dA))
    sin_u, sin_v = _sines(svdA, svdB)
    ok = delta > 0
    bound = num / delta if ok else math.inf
    return _report("wedin", bound, max(sin_u, sin_v), ok, _sin_scale(svdA), delta=delta)


def one_sided_sin_theta_bounds(svdA, svdB, dA):
    """U-side, V-side and uniform bounds built from both factorizations."""
    dA = _check_dA(dA, svdA)
    r = svdA.r
    s_r, s_next = svdA.sv(r), svdA.sv(r + 1)
    t_r, t_next = svdB.sv(r), svdB.sv(r + 1)
    g21, g12 = t_r - s_next, s_r - t_next
    ok = g21 > 0 and g12 > 0
    n_dA_vt = spectral_norm(dA @ svdB.V1)
    n_ut_dA = spectral_norm(svdB.U1.T @ dA)
    n_dA_v = spectral_norm(dA @ svdA.V1)
    n_u_dA = spectral_norm(svdA.U1.T @ dA)
    norm_dA = spectral_norm(dA)
    sin_u, sin_v = _sines(svdA, svdB)
    scale = _sin_scale(svdA)
    meta = dict(gap_12=g12, gap_21=g21)
    if not ok:
        inf = math.inf
        return (
            _report("one_sided_u", inf, sin_u, False, scale, **meta),
            _report("one_sided_v", inf, sin_v, False, scale, **meta),
            _report("uniform_hat", inf, max(sin_u, sin_v), False, scale, **meta),
        )
    d21 = t_r**2 - s_next**2
    d12 = s_r**2 - t_next**2
    bu = min((t_r * n_dA_vt + s_next * n_ut_dA) / d21, (s_r * n_dA_v + t_next * n_u_dA) / d12)
    bv = min((t_r * n_ut_dA + s_next * n_dA_vt) / d21, (s_r * n_u_dA + t_next * n_dA_v) / d12)
    buni = min(1.0 / g12, 1.0 / g21) * norm_dA
    return (
        _report("one_sided_u", bu, sin_u, True, scale, **meta),
        _report("one_sided_v", bv, sin_v, True, scale, **meta),
        _report("uniform_hat", buni, max(sin_u, sin_v), True, scale, **meta),
    )


def user_friendly_one_sided_bounds(svdA, dA, svdB=None):
    """Bounds that only use A-side quantities and the projected noise.

    ``svdB`` is used solely for the measured values; it is computed from
    A + dA when not supplied.
    """
    dA = _check_dA(dA, svdA)
    if svdB is None:
        svdB = conformal_svd(svdA.reconstruct() + dA, svdA.r)
    s_r, s_next = svdA.sigma_r, svdA.sigma_next
    gap = s_r - s_next
    norm_dA = spectral_norm(dA)
    al = alpha_blocks(dA, svdA)
    n12, n21, n22 = spectral_norm(al.a12), spectral_norm(al.a21), spectral_norm(al.a22)
    sin_u, sin_v = _sines(svdA, svdB)
    scale = _sin_scale(svdA)
    uni = uniform_clamp(norm_dA, gap)
    ok = gap > 0 and 4.0 * norm_dA <= gap
    if ok:
        denom = s_r**2 - s_next**2
        bu = 8.0 / 3.0 * (s_r * n21 + s_next * n12 + n22 * n12) / denom
        bv = 8.0 / 3.0 * (s_r * n12 + s_next * n21 + n22 * n21) / denom
    else:
        bu = bv = math.inf
    return (
        _report("uf_uniform", uni, max(sin_u, sin_v), True, scale, gap=gap, clamp_active=uni == 1.0),
        _report("uf_one_sided_u", bu, sin_u, ok, scale, gap=gap),
        _report("uf_one_sided_v", bv, sin_v, ok, scale, gap=gap),
    )


def subspace_projection_bound(A, r, W, svdA=None):
    """Distance between the top right singular subspace of A and range(W)."""
    A = as_matrix(A, "A")
    W = as_matrix(W, "W")
    if W.shape != (A.shape[1], r):
        raise DimensionError(f"W must be {A.shape[1]}x{r}, got {W.shape}")
    if svdA is None:
        svdA = conformal_svd(A, r)
    AW = A @ W
    Q, s_aw, _ = np.linalg.svd(AW, full_matrices=False)
    s_r_aw = float(s_aw[r - 1])
    s_next = svdA.sigma_next
    ok = s_r_aw > s_next
    proj = Q[:, :r].T @ (A @ orthonormal_complement(W))
    reports = []
    for p, cap, name in ((np.inf, 1.0, "subspace_spectral"), (2, math.sqrt(r), "subspace_frobenius")):
        num = spectral_norm(proj) if p == np.inf else frobenius_norm(proj)
        raw = s_r_aw * num / (s_r_aw**2 - s_next**2) if ok else math.inf
        bound = min(raw, cap)
        measured = sin_theta_norm(svdA.V1, W, p)
        reports.append(
            _report(name, bound, measured, ok, _sin_scale(svdA), unclamped=raw, clamp_active=raw > cap)
        )
    return tuple(reports)


# --- alignment rotations and the two-to-infinity decomposition ---------------


class AlignmentRotation(NamedTuple):
    q: np.ndarray
    s_diag: np.ndarray
    source: str
    s_minus_identity: float
    sin_theta_sq: float

    @property
    def s_bound_holds(self):
        return self.s_minus_identity <= self.sin_theta_sq * (1.0 + REL_SLACK) + ABS_SLACK


def _procrustes(M):
    Q1, s, Q2t = np.linalg.svd(M)
    return Q1 @ Q2t, s


def align_rotation_u(svdA, svdB):
    """q = Q1 Q2^T from the SVD of U1^T Ut1."""
    q, s = _procrustes(svdA.U1.T @ svdB.U1)
    sin_u = sin_theta_norm(svdA.U1, svdB.U1)
    return AlignmentRotation(q, s, "U", float(np.max(np.abs(s - 1.0))), sin_u**2)


def pca_align_rotation(svdA, svdB):
    """q = Q1 Q2^T from the SVD of Vt1^T V1."""
    q, s = _procrustes(svdB.V1.T @ svdA.V1)
    sin_v = sin_theta_norm(svdA.V1, svdB.V1)
    return AlignmentRotation(q, s, "V", float(np.max(np.abs(s - 1.0))), sin_v**2)


class TwoInfDecomposition(NamedTuple):
    terms: tuple
    target: np.ndarray
    residual: float
    rotation: AlignmentRotation


def two_to_infinity_decomposition(svdA, svdB, dA):
    """Four summands whose total is Ut1 - U1 q at the U-side rotation."""
    dA = _check_dA(dA, svdA)
    if svdB.sv(svdB.r) <= 0:
        raise GapViolation("perturbed sigma_r is zero; Sigma~_1 is singular")
    rot = align_rotation_u(svdA, svdB)
    U1, U2, V1, V2 = svdA.U1, svdA.U2, svdA.V1, svdA.V2
    right = svdB.V1 / svdB.sigma1  # Vt1 Sigma~1^{-1}
    left = U2 @ (U2.T @ dA)
    t1 = left @ V1 @ (V1.T @ right)
    t2 = left @ V2 @ (V2.T @ right)
    t3 = U2 @ (svdA.Sigma2 @ (V2.T @ right))
    Q1, s, Q2t = np.linalg.svd(U1.T @ svdB.U1)
    t4 = U1 @ Q1 @ np.diag(s - 1.0) @ Q2t
    target = svdB.U1 - U1 @ rot.q
    resid = frobenius_norm(t1 + t2 + t3 + t4 - target) / frobenius_norm(svdB.U1)
    return TwoInfDecomposition((t1, t2, t3, t4), target, resid, rot)


def r_factor(r, n, low_rank):
    """R(r, n): sqrt(r) + sqrt(log n) for rank-r A, else r + sqrt(r log n)."""
    if low_rank:
        return math.sqrt(r) + math.sqrt(math.log(n))
    return r + math.sqrt(r * math.log(n))


def is_low_rank(svdA, rank_tol=RANK_TOL):
    return svdA.sigma_next <= rank_tol * max(svdA.sv(1), np.finfo(float).tiny)


def two_to_infinity_bound(svdA, svdB, dA, sigma_noise, c1=1.0, c2=1.0, low_rank=None):
    """Row-wise error bound for Gaussian noise with free constants c1, c2."""
    dA = _check_dA(dA, svdA)
    n, m, r = svdA.n, svdA.m, svdA.r
    nbar = max(n, m)
    gap = svdA.sigma_r - svdA.sigma_next
    if low_rank is None:
        low_rank = is_low_rank(svdA)
    ok = gap > 0 and 21.0 * sigma_noise * math.sqrt(nbar) < gap
    R = r_factor(r, n, low_rank)
    u_inf = two_to_infinity_norm(svdA.U1)
    if gap > 0:
        t1 = u_inf * sigma_noise**2 * nbar / gap**2
        t2 = sigma_noise * R / gap
    else:
        t1 = t2 = math.inf
    dec = two_to_infinity_decomposition(svdA, svdB, dA)
    measured = two_to_infinity_norm(dec.target)
    comp_first = two_to_infinity_norm(dec.terms[0] + dec.terms[1] + dec.terms[2])
    comp_rot = two_to_infinity_norm(dec.terms[3])
    return _report(
        "two_to_infinity",
        c1 * t1 + c2 * t2,
        measured,
        ok,
        1.0,
        term1=t1,
        term2=t2,
        R=R,
        low_rank=low_rank,
        component_linear=comp_first,
        component_rotation=comp_rot,
        c1=c1,
        c2=c2,
    )


# --- singular value thresholding and PCA -------------------------------------


def svt_apply(A, r):
    """Hard threshold keeping the top r singular values."""
    return svd_truncate(A, r)


def svt_decomposition_identity(svdA, svdB, E):
    """Residual of the two-block expansion of A_r - At_r, relative to max(1, ||A_r||_F)."""
    E = _check_dA(E, svdA)
    n, m, r = svdA.n, svdA.m, svdA.r
    U1, U2, V2 = svdA.U1, svdA.U2, svdA.V2
    Vt1, Vt2, Ut2 = svdB.V1, svdB.V2, svdB.U2
    A = svdA.reconstruct()
    At = svdB.reconstruct()
    first = np.block(
        [
            [-U1.T @ E @ Vt1, -U1.T @ E @ Vt2],
            [-U2.T @ A @ V2 @ V2.T @ Vt1, np.zeros((n - r, m - r))],
        ]
    )
    second = np.block(
        [
            [np.zeros((r, r)), U1.T @ Ut2 @ Ut2.T @ At @ Vt2],
            [-U2.T @ E @ Vt1, np.zeros((n - r, m - r))],
        ]
    )
    rhs = svdA.U @ (first + second) @ svdB.V.T
    Ar = svdA.truncated()
    lhs = Ar - svdB.truncated()
    return frobenius_norm(rhs - lhs) / max(1.0, frobenius_norm(Ar))


class _SvtTerms(NamedTuple):
    norm_E: float
    Er_F: float
    S2r_F: float
    t: float
    s_next: float


def _svt_terms(svdA, E):
    sE = np.linalg.svd(E, compute_uv=False)
    r = svdA.r
    return _SvtTerms(
        norm_E=float(sE[0]) if sE.size else 0.0,
        Er_F=top_frobenius(sE, r),
        S2r_F=top_frobenius(svdA.sigma2, r),
        t=uniform_clamp(float(sE[0]) if sE.size else 0.0, svdA.sigma_r - svdA.sigma_next),
        s_next=svdA.sigma_next,
    )


def svt_bound_values(svdA, E):
    """(spectral, Frobenius) bound values for the thresholding error."""
    k = _svt_terms(svdA, _check_dA(E, svdA))
    spec = 2.0 * k.norm_E + 2.0 * k.s_next * k.t
    frob = math.sqrt(2.0 * k.Er_F**2 + 3.0 * (k.Er_F + k.S2r_F * k.t) ** 2)
    return spec, frob, k


def svt_bounds(svdA, svdB, E):
    E = _check_dA(E, svdA)
    spec, frob, k = svt_bound_values(svdA, E)
    diff = svdA.truncated() - svdB.truncated()
    scale = max(1.0, svdA.sv(1))
    meta = dict(norm_E=k.norm_E, Er_F=k.Er_F, S2r_F=k.S2r_F, clamp=k.t)
    return (
        _report("svt_spectral", spec, spectral_norm(diff), True, scale, **meta),
        _report("svt_frobenius", frob, frobenius_norm(diff), True, scale, **meta),
    )


def pca_bounds(svdA, svdB, E):
    E = _check_dA(E, svdA)
    spec_svt, frob_svt, k = svt_bound_values(svdA, E)
    spec = 3.0 * k.norm_E + 3.0 * k.s_next * k.t
    frob = frob_svt + k.Er_F + k.S2r_F * k.t
    rot = pca_align_rotation(svdA, svdB)
    diff = svdA.U1 * svdA.sigma1 - (svdB.U1 * svdB.sigma1) @ rot.q
    scale = max(1.0, svdA.sv(1))
    meta = dict(norm_E=k.norm_E, Er_F=k.Er_F, S2r_F=k.S2r_F, clamp=k.t)
    return (
        _report("pca_spectral", spec, spectral_norm(diff), True, scale, **meta),
        _report("pca_frobenius", frob, frobenius_norm(diff), True, scale, **meta),
    )


# --- auxiliary lemmas --------------------------------------------------------


def psd_sqrt(M):
    """Principal square root of a symmetric positive semi-definite matrix."""
    w, Q = eigh(M)
    return (Q * np.sqrt(np.clip(w, 0.0, None))) @ Q.T


def sqrt_rotation_factor(B, tol=1e-12):
    """Residual of B = sqrt(B B^T) U_B V_B^T, relative to max(1, ||B||_F)."""
    B = as_matrix(B, "B")
    if B.shape[0] != B.shape[1]:
        raise DimensionError("B must be square")
    nb = spectral_norm(B)
    if nb > 1.0 + tol:
        raise ValueError(f"||B|| = {nb:.6g} exceeds 1")
    UB, _, VBt = np.linalg.svd(B)
    rhs = psd_sqrt(B @ B.T) @ UB @ VBt
    return frobenius_norm(B - rhs) / max(1.0, frobenius_norm(B))


class ClassicalChecks(NamedTuple):
    weyl_ok: bool
    weyl_margin: float
    thompson_ok: bool
    thompson_margin: float
    power_sum_ok: bool
    power_sum_margin: float

    @property
    def ok(self):
        return self.weyl_ok and self.thompson_ok and self.power_sum_ok


def classical_inequality_checks(A, E, r=None, tol=1e-12):
    """Weyl, the Thompson partial-sum specialisation and the p = 2 power-sum lemma.

    Margins are the worst (largest) value of lhs - rhs; a check passes when its
    margin is at most ``tol * scale``. With ``r=None`` every split 1..k-1 is checked.
    """
    A = as_matrix(A, "A")
    E = as_matrix(E, "E")
    if A.shape != E.shape:
        raise DimensionError("A and E must have equal shapes")
    k = min(A.shape)
    sA = np.linalg.svd(A, compute_uv=False)
    sE = np.linalg.svd(E, compute_uv=False)
    sC = np.linalg.svd(A + E, compute_uv=False)
    scale = max(1.0, sA[0], sE[0]) * tol
    weyl = float(np.max(np.abs(sA - sC)) - sE[0])
    th, ps = -math.inf, -math.inf
    splits = range(1, k) if r is None else [r]
    for rr in splits:
        cnt = min(rr, k - rr)
        x = sC[rr : rr + cnt]
        y = sE[:cnt] + sA[rr : rr + cnt]
        th = max(th, float(np.max(np.cumsum(x) - np.cumsum(y))))
        ps = max(ps, float(np.sum(x**2) - np.sum(y**2)))
    if th == -math.inf:
        th = ps = 0.0
    return ClassicalChecks(weyl <= scale, weyl, th <= scale, th, ps <= scale * max(1.0, sA[0]), ps)
