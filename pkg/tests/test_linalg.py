import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import ortho_group

from helpers import SMALL_A, SMALL_DA, SMALL_SIGMA, SMALL_SIN
from sintheta.errors import DimensionError, NonFiniteError, OrthonormalityError
from sintheta.linalg import (
    conformal_svd,
    orthonormal_complement,
    principal_angles,
    sin_theta_equivalents,
    sin_theta_norm,
    spectral_gap_check,
    svd_truncate,
    two_to_infinity_norm,
)

e1 = np.array([[1.0], [0.0]])
e2 = np.array([[0.0], [1.0]])


def test_conformal_svd_diagonal():
    s = conformal_svd(np.diag([2.0, 0.5]), 1)
    np.testing.assert_allclose(s.U1, e1)
    np.testing.assert_allclose(s.U2, e2)
    assert s.sigma1 == pytest.approx([2.0])
    assert s.sigma2 == pytest.approx([0.5])


def test_conformal_svd_zero_matrix():
    s = conformal_svd(np.zeros((2, 2)), 1)
    assert s.sigma1[0] == 0 and s.sigma2[0] == 0
    assert s.check_invariants(np.zeros((2, 2)))["ok"]


def test_conformal_svd_small_oracle():
    s = conformal_svd(SMALL_A + SMALL_DA, 1)
    assert s.sigma1[0] == pytest.approx(SMALL_SIGMA[0], abs=1e-14)
    assert s.sigma2[0] == pytest.approx(SMALL_SIGMA[1], abs=1e-14)


def test_conformal_svd_rejects_bad_rank():
    with pytest.raises(DimensionError):
        conformal_svd(np.eye(3), 0)
    with pytest.raises(DimensionError):
        conformal_svd(np.eye(3), 4)


def test_conformal_svd_rejects_nan():
    with pytest.raises(NonFiniteError):
        conformal_svd(np.array([[1.0, np.nan]]), 1)


def test_sign_convention_deterministic(rng):
    A = rng.standard_normal((7, 4))
    a, b = conformal_svd(A, 2), conformal_svd(A.copy(), 2)
    assert np.array_equal(a.U, b.U) and np.array_equal(a.V, b.V)
    idx = np.argmax(np.abs(a.U), axis=0)
    assert np.all(a.U[idx, np.arange(7)] > 0)


def test_rectangular_sigma2_block(rng):
    s = conformal_svd(rng.standard_normal((5, 3)), 1)
    assert s.Sigma2.shape == (4, 2)
    assert s.sv(4) == 0.0 and s.sv(5) == 0.0
    np.testing.assert_allclose(s.sigma_padded(5)[3:], 0.0)


@given(
    n=st.integers(1, 12),
    m=st.integers(1, 12),
    seed=st.integers(0, 2**32 - 1),
    data=st.data(),
)
def test_conformal_svd_invariants(n, m, seed, data):
    r = data.draw(st.integers(1, min(n, m)))
    A = np.random.default_rng(seed).standard_normal((n, m))
    s = conformal_svd(A, r)
    inv = s.check_invariants(A)
    assert inv["ok"], inv
    assert s.U1.shape == (n, r) and s.U2.shape == (n, n - r)
    assert s.V1.shape == (m, r) and s.V2.shape == (m, m - r)


def test_reconstruction_desk_scale(rng):
    A = rng.standard_normal((200, 150))
    s = conformal_svd(A, 10)
    assert s.check_invariants(A)["recon"] <= 1e-12


def test_principal_angles_examples():
    assert principal_angles(e1, e1).cosines[0] == pytest.approx(1.0)
    assert principal_angles(e1, e2).cosines[0] == pytest.approx(0.0)
    t = 0.3
    Y = np.array([[np.cos(t)], [np.sin(t)]])
    assert principal_angles(e1, Y).cosines[0] == pytest.approx(np.cos(t), abs=1e-15)
    assert principal_angles(e1, Y).sines[0] == pytest.approx(np.sin(t), abs=1e-15)


def test_principal_angles_rejects_non_orthonormal():
    with pytest.raises(OrthonormalityError):
        principal_angles(2 * e1, e1)


def test_principal_angles_match_independent_svd(rng):
    X = ortho_group.rvs(8, random_state=1)[:, :3]
    Y = ortho_group.rvs(8, random_state=2)[:, :5]
    c = principal_angles(X, Y).cosines
    ref = np.linalg.svd(X.T @ Y, compute_uv=False)
    np.testing.assert_allclose(c, ref, atol=1e-12)
    assert np.all(np.diff(c) <= 0)


def test_sin_theta_examples():
    for p in (2, np.inf):
        assert sin_theta_norm(e1, e1, p) == 0.0
        assert sin_theta_norm(e1, e2, p) == pytest.approx(1.0)


def test_sin_theta_small_oracle():
    s = conformal_svd(SMALL_A + SMALL_DA, 1)
    assert sin_theta_norm(e1, s.U1) == pytest.approx(SMALL_SIN, abs=1e-15)


@given(seed=st.integers(0, 2**32 - 3), n=st.integers(2, 10), data=st.data())
def test_sin_theta_symmetry_and_rotation(seed, n, data):
    r = data.draw(st.integers(1, n - 1))
    X = ortho_group.rvs(n, random_state=seed)[:, :r]
    Y = ortho_group.rvs(n, random_state=seed + 1)[:, :r]
    Q = ortho_group.rvs(r, random_state=seed + 2) if r > 1 else np.array([[-1.0]])
    for p in (2, np.inf):
        a = sin_theta_norm(X, Y, p)
        assert a == pytest.approx(sin_theta_norm(Y, X, p), abs=1e-12)
        assert a == pytest.approx(sin_theta_norm(X @ Q, Y, p), abs=1e-12)
        assert 0 <= a <= (1 + 1e-12 if p == np.inf else np.sqrt(r) + 1e-12)


def test_sin_theta_equivalents_identical(rng):
    s = conformal_svd(rng.standard_normal((4, 4)), 2)
    assert max(sin_theta_equivalents(s, s)) <= 1e-14


@given(seed=st.integers(0, 2**32 - 1))
def test_sin_theta_equivalents_agree(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((4, 4))
    B = A + 0.3 * rng.standard_normal((4, 4))
    for side in ("U", "V"):
        eq = sin_theta_equivalents(conformal_svd(A, 2), conformal_svd(B, 2), side)
        assert eq.spread() <= 1e-10 * max(1.0, max(eq))


def test_sin_theta_equivalents_orthogonal():
    a = conformal_svd(np.diag([2.0, 1.0]), 1)
    b = conformal_svd(np.diag([1.0, 2.0]), 1)
    np.testing.assert_allclose(sin_theta_equivalents(a, b), 1.0, atol=1e-15)


def test_two_to_infinity_examples(rng):
    assert two_to_infinity_norm(np.eye(3)) == 1.0
    assert two_to_infinity_norm([[3.0, 4.0], [0.0, 1.0]]) == 5.0
    M = rng.standard_normal((5, 3))
    brute = max(np.sqrt(sum(x * x for x in row)) for row in M)
    assert two_to_infinity_norm(M) == pytest.approx(brute, rel=1e-15)


def test_gap_check_examples():
    a = conformal_svd(SMALL_A, 1)
    b = conformal_svd(SMALL_A + SMALL_DA, 1)
    g = spectral_gap_check(a, b)
    assert g.gap_12 == pytest.approx(2.0 - SMALL_SIGMA[1], abs=1e-14)
    assert g.gap_21 == pytest.approx(SMALL_SIGMA[0] - 0.5, abs=1e-14)
    assert g.ok
    same = spectral_gap_check(a, a)
    assert same.gap_12 == same.gap_21 == pytest.approx(1.5)
    flat = conformal_svd(np.eye(2), 1)
    g0 = spectral_gap_check(flat, flat)
    assert g0.gap_12 == 0 and not g0.ok_12 and not g0.ok_21


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 9), m=st.integers(1, 9))
def test_weyl_bound(seed, n, m):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, m))
    E = rng.standard_normal((n, m)) * rng.uniform(0, 2)
    diff = np.abs(np.linalg.svd(A, compute_uv=False) - np.linalg.svd(A + E, compute_uv=False))
    assert diff.max() <= np.linalg.norm(E, 2) + 1e-12


def test_complement_and_truncation(rng):
    X = ortho_group.rvs(6, random_state=3)[:, :2]
    C = orthonormal_complement(X)
    assert C.shape == (6, 4)
    np.testing.assert_allclose(X.T @ C, 0, atol=1e-14)
    np.testing.assert_allclose(svd_truncate(np.diag([3.0, 1.0]), 1), np.diag([3.0, 0.0]), atol=1e-15)
