import numpy as np

from sintheta.linalg import conformal_svd

# diag(2, 0.5) perturbed in the (1, 2) entry; values below come from an
# extended-precision eigensolve of At At^T and are frozen here.
SMALL_A = np.diag([2.0, 0.5])
SMALL_DA = np.array([[0.0, 0.1], [0.0, 0.0]])
SMALL_SIGMA = (2.00266441923832577, 0.499334781401034944)
SMALL_SIN = 0.0132943466887459796
SMALL_TAN = 0.0132955216636129308
SMALL_FU21 = 0.265910433272258617
SMALL_FACTOR1 = 0.532529363418599381
SMALL_WEDIN = 0.0665425768698868327
SMALL_SIN_SQ = 0.000176739653880571192
SMALL_ONE_MINUS_COS = 0.0000883737318985304328


def random_pair(rng, n, m, r, noise=0.05, gap=None):
    """A with a planted gap at r and a Gaussian perturbation scaled to noise * gap."""
    k = min(n, m)
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    V, _ = np.linalg.qr(rng.standard_normal((m, m)))
    top = np.sort(rng.uniform(1.0, 3.0, r))[::-1]
    g = gap if gap is not None else 0.5
    tail = np.sort(rng.uniform(0.0, max(top[-1] - g, 0.0), k - r))[::-1]
    s = np.concatenate([top, tail])
    A = (U[:, :k] * s) @ V[:, :k].T
    G = rng.standard_normal((n, m))
    dA = G * (noise * (top[-1] - (tail[0] if len(tail) else 0.0)) / np.linalg.norm(G, 2))
    return A, dA, conformal_svd(A, r), conformal_svd(A + dA, r)
