"""Dense SVD utilities, conformal splitting, principal angles and norms.

Everything here is a pure function of its inputs. Matrices are float64
``numpy.ndarray`` objects; singular values are always in descending order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, NonFiniteError, NumericalError, OrthonormalityError

TOL_ORTH = 1e-10
TOL_RECON = 1e-12
GAP_REL = 1e-8


def as_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-D float64 array."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return M


def spectral_norm(M):
    """Largest singular value; 0 for empty matrices."""
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def frobenius_norm(M):
    return float(np.linalg.norm(np.asarray(M, dtype=np.float64)))


def schatten_norm(M, p):
    """Schatten norm for p in {2, inf} (Frobenius and spectral)."""
    if p == 2:
        return frobenius_norm(M)
    if p == np.inf:
        return spectral_norm(M)
    raise ValueError(f"only p in {{2, inf}} is supported, got {p!r}")


def two_to_infinity_norm(M):
    """Maximum Euclidean row norm of ``M``."""
    M = as_matrix(M)
    if M.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(M, axis=1)))


def _sign_fix(M):
    # sign making each column's largest-magnitude entry positive (first index wins ties)
    if M.shape[1] == 0:
        return np.ones(0)
    idx = np.argmax(np.abs(M), axis=0)
    pivots = M[idx, np.arange(M.shape[1])]
    return np.where(pivots < 0, -1.0, 1.0)


@dataclass(frozen=True, eq=False)
class ConformalSVD:
    """Full SVD of an n x m matrix split at rank r.

    ``U1``/``V1`` hold the leading r singular vectors, ``U2``/``V2`` their full
    orthonormal complements. ``sigma2`` has ``min(n, m) - r`` entries; singular
    values with index beyond ``min(n, m)`` are treated as zero.
    """

    r: int
    U1: np.ndarray
    U2: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray

    @property
    def n(self):
        return self.U1.shape[0]

    @property
    def m(self):
        return self.V1.shape[0]

    @property
    def complete(self):
        return self.U2 is not None and self.V2 is not None

    @property
    def U(self):
        return np.hstack([self.U1, self.U2])

    @property
    def V(self):
        return np.hstack([self.V1, self.V2])

    @property
    def sigma(self):
        return np.concatenate([self.sigma1, self.sigma2])

    @property
    def Sigma1(self):
        return np.diag(self.sigma1)

    @property
    def Sigma2(self):
        """Rectangular (n-r) x (m-r) lower-right block of Sigma."""
        S = np.zeros((self.n - self.r, self.m - self.r))
        k = len(self.sigma2)
        S[np.arange(k), np.arange(k)] = self.sigma2
        return S

    def sv(self, i):
        """The i-th singular value (1-based), zero beyond ``min(n, m)``."""
        s = self.sigma
        return float(s[i - 1]) if i <= len(s) else 0.0

    def sigma_padded(self, length):
        """Singular values zero-extended (or cut) to ``length`` entries."""
        s = np.zeros(length)
        k = min(length, len(self.sigma))
        s[:k] = self.sigma[:k]
        return s

    @property
    def sigma_r(self):
        return self.sv(self.r)

    @property
    def sigma_next(self):
        """sigma_{r+1}, zero when r = min(n, m)."""
        return self.sv(self.r + 1)

    def reconstruct(self):
        k = len(self.sigma)
        U, V = self.U, self.V
        return (U[:, :k] * self.sigma) @ V[:, :k].T

    def truncated(self):
        """Rank-r hard threshold U1 Sigma1 V1^T."""
        return (self.U1 * self.sigma1) @ self.V1.T

    def check_invariants(self, A=None, tol_orth=TOL_ORTH, tol_recon=TOL_RECON):
        """Return the worst violation of each invariant (0 means perfect)."""
        U, V = self.U, self.V
        out = {
            "orth_u": frobenius_norm(U.T @ U - np.eye(U.shape[1])),
            "orth_v": frobenius_norm(V.T @ V - np.eye(V.shape[1])),
            "order": float(
                max(
                    np.max(np.diff(self.sigma1), initial=0.0),
                    np.max(np.diff(self.sigma2), initial=0.0),
                    (np.max(self.sigma2) - np.min(self.sigma1)) if len(self.sigma2) else 0.0,
                )
            ),
        }
        if A is not None:
            A = as_matrix(A)
            out["recon"] = frobenius_norm(A - self.reconstruct()) / max(frobenius_norm(A), 1e-300)
        ok = out["orth_u"] <= tol_orth and out["orth_v"] <= tol_orth and out["order"] <= 0.0
        if A is not None:
            ok = ok and (out["recon"] <= tol_recon or frobenius_norm(A) == 0.0)
        out["ok"] = ok
        return out


def conformal_svd(A, r, full=True):
    """Full SVD of ``A`` split at rank ``r`` with a deterministic sign convention.

    Each paired singular-vector column (u_i, v_i) is flipped together so that the
    largest-magnitude entry of u_i is positive; unpaired complement columns are
    fixed by their own largest entry. With ``full=False`` only the leading
    blocks are kept and ``U2``/``V2`` are ``None``.
    """
    A = as_matrix(A, "A")
    n, m = A.shape
    k = min(n, m)
    if not (1 <= r <= k):
        raise DimensionError(f"split rank r={r} outside [1, {k}] for a {n}x{m} matrix")
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=full)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    V = Vt.T
    su = _sign_fix(U)
    sv = np.concatenate([su[:k], _sign_fix(V[:, k:])])
    U = U * su
    V = V * sv
    return ConformalSVD(
        r=r,
        U1=U[:, :r],
        U2=U[:, r:] if full else None,
        V1=V[:, :r],
        V2=V[:, r:] if full else None,
        sigma1=s[:r].copy(),
        sigma2=s[r:].copy(),
    )


def orthonormality_error(X):
    X = np.asarray(X, dtype=np.float64)
    return frobenius_norm(X.T @ X - np.eye(X.shape[1]))


def _require_orthonormal(X, name, tol):
    err = orthonormality_error(X)
    if err > tol:
        raise OrthonormalityError(f"{name} is not orthonormal: ||X^T X - I||_F = {err:.3e}")


def orthonormal_complement(X):
    """Orthonormal basis of the orthogonal complement of range(X)."""
    X = as_matrix(X)
    n, k = X.shape
    Q, _ = np.linalg.qr(X, mode="complete")
    return Q[:, k:]


class PrincipalAngleSet(NamedTuple):
    cosines: np.ndarray

    @property
    def sines(self):
        return np.sin(np.arccos(self.cosines))

    @property
    def angles(self):
        return np.arccos(self.cosines)


def principal_angles(X, Y, tol_orth=TOL_ORTH):
    """Cosines of the principal angles between range(X) and range(Y), descending."""
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise DimensionError("X and Y must live in the same ambient space")
    if X.shape[1] > Y.shape[1]:
        raise DimensionError("principal_angles needs dim(X) <= dim(Y)")
    _require_orthonormal(X, "X", tol_orth)
    _require_orthonormal(Y, "Y", tol_orth)
    c = np.linalg.svd(X.T @ Y, compute_uv=False)[: X.shape[1]]
    return PrincipalAngleSet(np.clip(c, 0.0, 1.0))


def sin_theta_norm(X, Y, p=np.inf, tol_orth=TOL_ORTH):
    """Norm of sin Theta(X, Y), computed as ||X_perp^T Y||_p for p in {2, inf}."""
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape != Y.shape:
        raise DimensionError(f"X {X.shape} and Y {Y.shape} must have equal shapes")
    _require_orthonormal(X, "X", tol_orth)
    _require_orthonormal(Y, "Y", tol_orth)
    # ||X_perp^T Y|| equals ||(I - X X^T) Y|| without forming the complement
    return schatten_norm(Y - X @ (X.T @ Y), p)


class SinThetaEquivalents(NamedTuple):
    cross_12: float
    cross_21: float
    projector_product: float
    projector_commutator: float
    projector_difference: float

    def spread(self):
        vals = np.array(self)
        return float(vals.max() - vals.min())


def sin_theta_equivalents(svdA, svdB, side="U"):
    """The five equal expressions of the sin Theta spectral norm for one side."""
    if svdA.r != svdB.r or svdA.n != svdB.n or svdA.m != svdB.m:
        raise DimensionError("factorizations must share shape and split rank")
    if side == "U":
        X1, X2, Y1, Y2 = svdA.U1, svdA.U2, svdB.U1, svdB.U2
    elif side == "V":
        X1, X2, Y1, Y2 = svdA.V1, svdA.V2, svdB.V1, svdB.V2
    else:
        raise ValueError("side must be 'U' or 'V'")
    P_x1, P_x2 = X1 @ X1.T, X2 @ X2.T
    P_y1, P_y2 = Y1 @ Y1.T, Y2 @ Y2.T
    return SinThetaEquivalents(
        spectral_norm(X1.T @ Y2),
        spectral_norm(X2.T @ Y1),
        spectral_norm(P_y1 @ P_x2),
        spectral_norm(P_y1 @ P_x2 - P_y2 @ P_x1),
        spectral_norm(P_y1 - P_x1),
    )


class GapReport(NamedTuple):
    """Cross gaps sigma_r - tilde sigma_{r+1} and tilde sigma_r - sigma_{r+1}."""

    gap_12: float
    gap_21: float
    delta: float

    @property
    def ok_12(self):
        return self.gap_12 > self.delta

    @property
    def ok_21(self):
        return self.gap_21 > self.delta

    @property
    def ok(self):
        return self.ok_12 and self.ok_21

    @property
    def gap_min(self):
        return min(self.gap_12, self.gap_21)


def default_gap_delta(svdA, svdB=None):
    s1 = svdA.sv(1) if svdB is None else max(svdA.sv(1), svdB.sv(1))
    return GAP_REL * max(s1, 1.0)


def spectral_gap_check(svdA, svdB, delta=None):
    """Report both cross gaps at the shared split rank; never raises on violation."""
    if svdA.r != svdB.r:
        raise DimensionError("factorizations must share the split rank")
    if delta is None:
        delta = default_gap_delta(svdA, svdB)
    r = svdA.r
    return GapReport(
        gap_12=svdA.sv(r) - svdB.sv(r + 1),
        gap_21=svdB.sv(r) - svdA.sv(r + 1),
        delta=float(delta),
    )


def leading_left_vectors(M, r):
    """Top-r left singular vectors of ``M`` via a partial symmetric eigensolve.

    Cheaper than a full SVD for large square inputs; the basis is returned in
    descending order of singular value, without any sign normalisation.
    """
    from scipy.linalg import eigh

    M = as_matrix(M)
    n = M.shape[0]
    w, Q = eigh(M @ M.T, subset_by_index=[n - r, n - 1])
    order = np.argsort(w)[::-1]
    return Q[:, order], np.sqrt(np.clip(w[order], 0.0, None))


def svd_truncate(M, r):
    """Hard threshold keeping the top ``r`` singular triplets of ``M``."""
    M = as_matrix(M)
    k = min(M.shape)
    if not (0 <= r <= k):
        raise DimensionError(f"rank {r} outside [0, {k}]")
    if r == 0:
        return np.zeros_like(M)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return (U[:, :r] * s[:r]) @ Vt[:r]


def top_frobenius(values, r):
    """Frobenius norm of the top-r truncation given descending singular values."""
    values = np.asarray(values, dtype=np.float64)
    return float(np.linalg.norm(values[:r]))
