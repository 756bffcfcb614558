"""Exact angular perturbation formulae for singular subspaces.

Given conformal SVDs of ``A`` and ``At = A + dA`` split at the same rank r,
the four cross products U1^T Ut2, U2^T Ut1, V1^T Vt2, V2^T Vt1 are written as
Hadamard products of reciprocal-gap matrices (the F blocks) with terms that
are linear in ``dA``. This module evaluates those formulae, the Hadamard norm
bounds with their tightness witnesses, and the Neumann-series forms.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ContractionError, DimensionError, GapViolation, NotLowRankError, TruncationError
from .linalg import as_matrix, schatten_norm, spectral_gap_check, spectral_norm

SERIES_TOL = 1e-12
SERIES_KMAX = 200
RANK_TOL = 1e-10


class AlphaBlocks(NamedTuple):
    a11: np.ndarray
    a12: np.ndarray
    a21: np.ndarray
    a22: np.ndarray

    def full(self):
        return np.block([[self.a11, self.a12], [self.a21, self.a22]])


class FBlocks(NamedTuple):
    fu12: np.ndarray
    fu21: np.ndarray
    fv12: np.ndarray
    fv21: np.ndarray


class CrossTerms(NamedTuple):
    """x = U1^T Ut2, y = U2^T Ut1, w = V1^T Vt2, z = V2^T Vt1."""

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    z: np.ndarray

    def max_abs_diff(self, other):
        return max(
            float(np.max(np.abs(a - b), initial=0.0)) for a, b in zip(self, other)
        )


class SeriesDiagnostics(NamedTuple):
    contraction: float
    terms_used: int
    tail_estimate: float
    term_norms: tuple


class SeriesResult(NamedTuple):
    cross: CrossTerms
    yz: SeriesDiagnostics
    xw: SeriesDiagnostics


def _check_pair(svdA, svdB):
    if (svdA.n, svdA.m, svdA.r) != (svdB.n, svdB.m, svdB.r):
        raise DimensionError(
            f"factorizations differ: {(svdA.n, svdA.m, svdA.r)} vs {(svdB.n, svdB.m, svdB.r)}"
        )


def _check_dA(dA, svdA):
    dA = as_matrix(dA, "dA")
    if dA.shape != (svdA.n, svdA.m):
        raise DimensionError(f"dA has shape {dA.shape}, expected {(svdA.n, svdA.m)}")
    return dA


def alpha_blocks(dA, svdA):
    """Projected noise U_i^T dA V_j partitioned at r."""
    dA = _check_dA(dA, svdA)
    U1, U2, V1, V2 = svdA.U1, svdA.U2, svdA.V1, svdA.V2
    left1 = U1.T @ dA
    left2 = U2.T @ dA
    return AlphaBlocks(left1 @ V1, left1 @ V2, left2 @ V1, left2 @ V2)


def f_blocks(svdA, svdB, delta=None):
    """Reciprocal-gap matrices with entries 1/(sigma~_j^2 - sigma_i^2).

    Singular values with index beyond min(n, m) are taken as zero.
    """
    _check_pair(svdA, svdB)
    gaps = spectral_gap_check(svdA, svdB, delta)
    if not gaps.ok:
        raise GapViolation(
            f"cross gaps ({gaps.gap_12:.3e}, {gaps.gap_21:.3e}) not above {gaps.delta:.3e}"
        )
    n, m, r = svdA.n, svdA.m, svdA.r
    N = max(n, m)
    sa = svdA.sigma_padded(N) ** 2
    sb = svdB.sigma_padded(N) ** 2
    return FBlocks(
        fu12=1.0 / (sb[None, r:n] - sa[:r, None]),
        fu21=1.0 / (sb[None, :r] - sa[r:n, None]),
        fv12=1.0 / (sb[None, r:m] - sa[:r, None]),
        fv21=1.0 / (sb[None, :r] - sa[r:m, None]),
    )


def direct_cross_terms(svdA, svdB):
    """The literal products of the two factorizations (the oracle)."""
    _check_pair(svdA, svdB)
    return CrossTerms(
        x=svdA.U1.T @ svdB.U2,
        y=svdA.U2.T @ svdB.U1,
        w=svdA.V1.T @ svdB.V2,
        z=svdA.V2.T @ svdB.V1,
    )


def exact_cross_terms(svdA, svdB, dA, delta=None):
    """Evaluate the four Hadamard-product formulae for the cross terms."""
    _check_pair(svdA, svdB)
    dA = _check_dA(dA, svdA)
    F = f_blocks(svdA, svdB, delta)
    U1, U2, V1, V2 = svdA.U1, svdA.U2, svdA.V1, svdA.V2
    Ut1, Ut2, Vt1, Vt2 = svdB.U1, svdB.U2, svdB.V1, svdB.V2
    S1, S2 = svdA.Sigma1, svdA.Sigma2
    St1, St2 = svdB.Sigma1, svdB.Sigma2
    x = F.fu12 * (U1.T @ dA @ Vt2 @ St2.T + S1 @ V1.T @ dA.T @ Ut2)
    y = F.fu21 * (U2.T @ dA @ Vt1 @ St1 + S2 @ V2.T @ dA.T @ Ut1)
    w = F.fv12 * (S1 @ U1.T @ dA @ Vt2 + V1.T @ dA.T @ Ut2 @ St2)
    z = F.fv21 * (S2.T @ U2.T @ dA @ Vt1 + V2.T @ dA.T @ Ut1 @ St1)
    return CrossTerms(x, y, w, z)


def identity_tolerance(svdA, svdB, base=1e-9):
    """Absolute entrywise tolerance base * max(1, 1/gap_min)."""
    gaps = spectral_gap_check(svdA, svdB, 0.0)
    gmin = gaps.gap_min
    if gmin <= 0:
        return np.inf
    return base * max(1.0, 1.0 / gmin)


# --- Hadamard norm lemma -----------------------------------------------------

_WHICH = ("B1", "B2", "B3", "B4")


def hadamard_bound_factors(svdA, svdB):
    """The four multipliers of the Hadamard norm lemma, in order B1..B4."""
    _check_pair(svdA, svdB)
    r = svdA.r
    s_r, s_next = svdA.sv(r), svdA.sv(r + 1)
    t_r, t_next = svdB.sv(r), svdB.sv(r + 1)
    if not (t_r - s_next > 0 and s_r - t_next > 0):
        raise GapViolation("Hadamard factors need both cross gaps positive")
    d21 = t_r**2 - s_next**2
    d12 = s_r**2 - t_next**2
    return (t_r / d21, s_next / d21, t_next / d12, s_r / d12)


def _h_shape(which, svdA):
    n, m, r = svdA.n, svdA.m, svdA.r
    return {"B1": (n - r, r), "B2": (m - r, r), "B3": (r, m - r), "B4": (r, n - r)}[which]


def _b_matrix(which, H, svdA, svdB, F):
    if which == "B1":
        return F.fu21 * (H @ svdB.Sigma1)
    if which == "B2":
        return F.fu21 * (svdA.Sigma2 @ H)
    if which == "B3":
        return F.fu12 * (H @ svdB.Sigma2.T)
    return F.fu12 * (svdA.Sigma1 @ H)


class HadamardCheck(NamedTuple):
    lhs: float
    rhs: float
    dominated: bool


def hadamard_bound_check(H, which, svdA, svdB, p=np.inf, rel=1e-12):
    """Compare ||B_i||_p with factor_i * ||H||_p for one of the four lemma variants."""
    if which not in _WHICH:
        raise ValueError(f"which must be one of {_WHICH}")
    H = np.asarray(H, dtype=np.float64)
    shape = _h_shape(which, svdA)
    if H.shape != shape:
        raise DimensionError(f"{which} needs H of shape {shape}, got {H.shape}")
    factor = hadamard_bound_factors(svdA, svdB)[_WHICH.index(which)]
    F = f_blocks(svdA, svdB, 0.0)
    lhs = schatten_norm(_b_matrix(which, H, svdA, svdB, F), p)
    rhs = factor * schatten_norm(H, p)
    return HadamardCheck(lhs, rhs, bool(lhs <= rhs * (1.0 + rel) + 1e-300))


def tightness_witness(which, shape, eps):
    """Single-entry matrix attaining the lemma bound.

    For B1/B2 the entry sits in the first row, last column; for B3/B4 in the
    last row, first column.
    """
    if which not in _WHICH:
        raise ValueError(f"which must be one of {_WHICH}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    rows, cols = shape
    H = np.zeros((rows, cols))
    if which in ("B1", "B2"):
        H[0, cols - 1] = eps
    else:
        H[rows - 1, 0] = eps
    return H


# --- Neumann series form -----------------------------------------------------


def _pair_norm(a, b):
    return float(np.hypot(spectral_norm(a), spectral_norm(b)))


def _neumann(first, step, kappa, tol, k_max):
    total = [t.copy() for t in first]
    term = first
    norms = [_pair_norm(*term)]
    c0 = norms[0]
    k = 0
    tail = kappa / (1.0 - kappa) * c0
    while tail > tol:
        if k >= k_max:
            raise TruncationError(
                f"tail estimate {tail:.3e} still above tol {tol:.3e} after {k_max} terms"
            )
        term = step(*term)
        k += 1
        total[0] += term[0]
        total[1] += term[1]
        norms.append(_pair_norm(*term))
        tail = kappa ** (k + 1) / (1.0 - kappa) * c0
    return total, SeriesDiagnostics(float(kappa), k + 1, float(tail), tuple(norms))


def series_contractions(svdA, svdB, dA):
    """Certified bounds on the norms of the two series maps."""
    _check_pair(svdA, svdB)
    al = alpha_blocks(dA, svdA)
    r = svdA.r
    g21 = svdB.sv(r) - svdA.sv(r + 1)
    g12 = svdA.sv(r) - svdB.sv(r + 1)
    if g21 <= 0 or g12 <= 0:
        raise GapViolation("series maps need both cross gaps positive")
    return spectral_norm(al.a22) / g21, spectral_norm(al.a11) / g12


def series_cross_terms(svdA, svdB, dA, tol=SERIES_TOL, k_max=SERIES_KMAX):
    """Cross terms from the Neumann expansions P = sum_k F^k(C)."""
    _check_pair(svdA, svdB)
    dA = _check_dA(dA, svdA)
    F = f_blocks(svdA, svdB, 0.0)
    al = alpha_blocks(dA, svdA)
    kF, kG = series_contractions(svdA, svdB, dA)
    for name, kap in (("F", kF), ("G", kG)):
        if not kap < 1.0:
            raise ContractionError(f"series map {name} has certificate {kap:.3e} >= 1")

    U1, U2, V1, V2 = svdA.U1, svdA.U2, svdA.V1, svdA.V2
    S1, S2 = svdA.Sigma1, svdA.Sigma2
    St1, St2 = svdB.Sigma1, svdB.Sigma2
    u11 = U1.T @ svdB.U1
    v11 = V1.T @ svdB.V1
    u22 = U2.T @ svdB.U2
    v22 = V2.T @ svdB.V2
    a11, a12, a21, a22 = al

    c1 = F.fu21 * (S2 @ a12.T @ u11 + a21 @ v11 @ St1)
    c2 = F.fv21 * (a12.T @ u11 @ St1 + S2.T @ a21 @ v11)
    c3 = F.fu12 * (a12 @ v22 @ St2.T + S1 @ a21.T @ u22)
    c4 = F.fv12 * (S1 @ a12 @ v22 + a21.T @ u22 @ St2)

    def step_f(y, z):
        return (
            F.fu21 * (S2 @ a22.T @ y) + F.fu21 * (a22 @ z @ St1),
            F.fv21 * (a22.T @ y @ St1) + F.fv21 * (S2.T @ a22 @ z),
        )

    def step_g(x, w):
        return (
            F.fu12 * (a11 @ w @ St2.T) + F.fu12 * (S1 @ a11.T @ x),
            F.fv12 * (S1 @ a11 @ w) + F.fv12 * (a11.T @ x @ St2),
        )

    (y, z), dyz = _neumann((c1, c2), step_f, kF, tol, k_max)
    (x, w), dxw = _neumann((c3, c4), step_g, kG, tol, k_max)
    return SeriesResult(CrossTerms(x, y, w, z), dyz, dxw)


def low_rank_series_cross_terms(svdA, svdB, dA, tol=SERIES_TOL, k_max=SERIES_KMAX, rank_tol=RANK_TOL):
    """y and z from the explicit series valid when A has rank exactly r."""
    _check_pair(svdA, svdB)
    dA = _check_dA(dA, svdA)
    r = svdA.r
    if svdA.sv(r + 1) > rank_tol * max(svdA.sv(1), np.finfo(float).tiny):
        raise NotLowRankError(
            f"sigma_(r+1) = {svdA.sv(r + 1):.3e} exceeds {rank_tol:g} * sigma_1"
        )
    a11, a12, a21, a22 = alpha_blocks(dA, svdA)
    t_r = svdB.sv(r)
    if t_r <= 0:
        raise GapViolation("perturbed sigma_r is zero")
    lam = spectral_norm(a22) / t_r
    if not lam < 1.0:
        raise ContractionError(f"contraction {lam:.3e} >= 1")
    inv1 = 1.0 / svdB.sigma1
    inv2 = inv1**2
    u11 = svdA.U1.T @ svdB.U1
    v11 = svdA.V1.T @ svdB.V1
    ty = a21 @ v11 * inv1 + a22 @ a12.T @ u11 * inv2
    tz = a12.T @ u11 * inv1 + a22.T @ a21 @ v11 * inv2
    aat = a22 @ a22.T
    ata = a22.T @ a22

    def step(y, z):
        return aat @ y * inv2, ata @ z * inv2

    # each term shrinks by at most lam^2 in the pair norm
    (y, z), diag = _neumann((ty, tz), step, lam**2, tol, k_max)
    diag = diag._replace(contraction=float(lam))
    return (y, z), diag
