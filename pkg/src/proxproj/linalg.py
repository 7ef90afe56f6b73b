"""Dense linear-algebra kernels: SVD, cached SPD solves, tridiagonal solve.

All routines operate on float64 ndarrays.  Matrices are two-dimensional and
row-major; vectors are one-dimensional.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import FactorizationError, NotSpdError, SingularMatrixError

# Singular values below RANK_RTOL * sigma_max count as zero wherever they
# would be used as divisors.
RANK_RTOL = 1e-12


def as_vector(x, name="vector"):
    """Coerce to a finite float64 1-D array, raising ValueError otherwise."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains NaN or Inf")
    return v


def as_matrix(x, name="matrix"):
    """Coerce to a finite float64 2-D array, raising ValueError otherwise."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or Inf")
    return a


@dataclass(frozen=True)
class SvdFactorization:
    """Thin SVD ``a = u @ diag(sigma) @ v.T``.

    ``u`` is m-by-k and ``v`` is n-by-k with orthonormal columns, ``sigma``
    is length k = min(m, n), nonnegative and descending.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank_mask(self):
        """Boolean mask of singular values treated as nonzero."""
        if self.sigma.size == 0 or self.sigma[0] == 0.0:
            return np.zeros(self.sigma.shape, dtype=bool)
        return self.sigma > RANK_RTOL * self.sigma[0]

    def reconstruct(self):
        return (self.u * self.sigma) @ self.v.T


def svd(a):
    """Thin SVD of a dense matrix.

    Raises FactorizationError if LAPACK fails to converge.
    """
    a = as_matrix(a)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(
            f"SVD did not converge for {a.shape[0]}x{a.shape[1]} matrix"
        ) from exc
    return SvdFactorization(u=u, sigma=s, v=vt.T)


class SpdSolver:
    """Cholesky factorization of an SPD matrix, cached for repeated solves."""

    def __init__(self, g):
        g = as_matrix(g, "SPD matrix")
        if g.shape[0] != g.shape[1]:
            raise ValueError(f"SPD matrix must be square, got {g.shape}")
        try:
            self._cho = scipy.linalg.cho_factor(g)
        except scipy.linalg.LinAlgError as exc:
            raise NotSpdError(
                f"matrix of order {g.shape[0]} is not positive definite: {exc}"
            ) from exc

    def solve(self, r):
        return scipy.linalg.cho_solve(self._cho, r)


def spd_solve(g, r):
    """Solve ``g @ y = r`` for SPD ``g``.

    For factor-once/solve-many use, construct an SpdSolver directly.
    """
    return SpdSolver(g).solve(np.asarray(r, dtype=np.float64))


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Square tridiagonal matrix stored as its three diagonals.

    ``sub`` and ``sup`` have length n-1, ``diag`` has length n.  Callers are
    responsible for only using this with diagonally dominant or SPD systems;
    the elimination below does not pivot.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        n = self.diag.shape[0]
        if self.sub.shape != (n - 1,) or self.sup.shape != (n - 1,):
            raise ValueError(
                f"off-diagonals must have length {n - 1}, got "
                f"{self.sub.shape[0]} and {self.sup.shape[0]}"
            )

    @property
    def n(self):
        return self.diag.shape[0]

    def to_dense(self):
        a = np.diag(self.diag)
        n = self.n
        a[np.arange(1, n), np.arange(n - 1)] = self.sub
        a[np.arange(n - 1), np.arange(1, n)] = self.sup
        return a

    def matvec(self, x):
        y = self.diag * x
        y[1:] += self.sub * x[:-1]
        y[:-1] += self.sup * x[1:]
        return y


def thomas_solve(t, r):
    """Solve ``t @ y = r`` by the O(n) tridiagonal elimination sweep.

    Raises SingularMatrixError on a zero pivot.
    """
    r = as_vector(r, "right-hand side")
    n = t.n
    if r.shape[0] != n:
        raise ValueError(f"right-hand side has length {r.shape[0]}, expected {n}")
    scale = max(np.abs(t.diag).max(), np.abs(t.sub).max(initial=0.0),
                np.abs(t.sup).max(initial=0.0), 1.0)
    tiny = 1e-300 * scale
    cp = np.empty(n - 1)
    dp = np.empty(n)
    piv = t.diag[0]
    if abs(piv) <= tiny:
        raise SingularMatrixError("zero pivot at row 0 during forward sweep")
    if n > 1:
        cp[0] = t.sup[0] / piv
    dp[0] = r[0] / piv
    for i in range(1, n):
        piv = t.diag[i] - t.sub[i - 1] * cp[i - 1]
        if abs(piv) <= tiny:
            raise SingularMatrixError(f"zero pivot at row {i} during forward sweep")
        if i < n - 1:
            cp[i] = t.sup[i] / piv
        dp[i] = (r[i] - t.sub[i - 1] * dp[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        dp[i] -= cp[i] * dp[i + 1]
    return dp
