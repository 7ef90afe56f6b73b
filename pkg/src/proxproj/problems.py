"""Problem instances for the four applications."""

import numpy as np

from .errors import IllPosedError
from .linalg import as_matrix, as_vector
from .prox import ObservationMask

# Mass balance required of the two transport densities after normalization.
EMD_MASS_TOL = 1e-12


class BpProblem:
    """min ||x||_1  s.t.  A x = b, with A full row rank (m < n)."""

    def __init__(self, a, b):
        self.a = as_matrix(a, "A")
        self.b = as_vector(b, "b")
        if self.a.shape[0] != self.b.shape[0]:
            raise ValueError(
                f"A has {self.a.shape[0]} rows but b has length {self.b.shape[0]}"
            )
        self.eps = 0.0

    @property
    def m(self):
        return self.a.shape[0]

    @property
    def n(self):
        return self.a.shape[1]


class SpcpProblem:
    """min ||L||_* + lam ||S||_1  s.t.  ||L + S - M||_F <= eps.

    ``lam`` defaults to 1/sqrt(n1) with n1 the number of rows of M.
    """

    def __init__(self, m, lam=None, eps=0.0):
        self.m = as_matrix(m, "M")
        if lam is None:
            lam = 1.0 / np.sqrt(self.m.shape[0])
        if not lam > 0:
            raise ValueError(f"lam must be positive, got {lam}")
        if eps < 0:
            raise ValueError(f"eps must be nonnegative, got {eps}")
        self.lam = float(lam)
        self.eps = float(eps)

    @property
    def shape(self):
        return self.m.shape


class EmdProblem:
    """min ||m||_1  s.t.  ||div(m) + rho1 - rho0||_F <= eps on an n-by-n grid.

    Both densities are normalized to unit total mass at construction; the
    discrete divergence with Neumann boundaries never has full row rank, so
    eps must be positive for the projection to exist.
    """

    def __init__(self, rho0, rho1, h=1.0, eps=1e-10):
        rho0 = as_matrix(rho0, "rho0")
        rho1 = as_matrix(rho1, "rho1")
        if rho0.shape != rho1.shape or rho0.shape[0] != rho0.shape[1]:
            raise ValueError(
                f"densities must be square with equal shape, got {rho0.shape} "
                f"and {rho1.shape}"
            )
        if rho0.shape[0] < 2:
            raise ValueError("grid must be at least 2x2")
        if (rho0 < 0).any() or (rho1 < 0).any():
            raise IllPosedError("densities must be nonnegative")
        s0, s1 = rho0.sum(), rho1.sum()
        if s0 <= 0 or s1 <= 0:
            raise IllPosedError("degenerate input: density with zero total mass")
        if not eps > 0:
            raise ValueError(f"eps must be positive for the transport problem, got {eps}")
        if not h > 0:
            raise ValueError(f"grid size h must be positive, got {h}")
        self.rho0 = rho0 / s0
        self.rho1 = rho1 / s1
        self.h = float(h)
        self.eps = float(eps)
        self._operator = None
        balance = abs(self.rho0.sum() - self.rho1.sum())
        if balance > EMD_MASS_TOL:
            raise IllPosedError(f"density masses differ by {balance:.3e} after scaling")

    @property
    def n(self):
        return self.rho0.shape[0]

    @property
    def operator(self):
        """Cached divergence operator for this grid (built on first use)."""
        if self._operator is None:
            from .apps.emd import DivergenceOperator

            self._operator = DivergenceOperator(self.n, self.h)
        return self._operator


class SmcProblem:
    """min ||X||_*  s.t.  ||P_Omega(X - M)||_F <= eps.

    ``m_observed`` carries values on the mask; entries off the mask are
    ignored.  eps = 0 pins the observed entries exactly; this stays well
    posed for any mask because the selection operator, viewed as one row of
    the identity per observed entry, always has full row rank.
    """

    def __init__(self, m_observed, omega, eps):
        self.m_observed = as_matrix(m_observed, "observed matrix")
        if not isinstance(omega, ObservationMask):
            omega = ObservationMask(omega)
        omega.check_shape(self.m_observed.shape)
        if eps < 0:
            raise ValueError(f"eps must be nonnegative, got {eps}")
        if len(omega) == 0:
            raise IllPosedError("the observation mask is empty")
        self.omega = omega
        self.eps = float(eps)

    @property
    def shape(self):
        return self.m_observed.shape
