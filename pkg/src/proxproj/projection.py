"""Exact Euclidean projection onto C = {x : ||A x - b|| <= eps}.

For an infeasible point the projection is

    P(x) = x - A^T (A A^T + eps*tau I)^{-1} (A x - b),

where tau > 0 is the unique root of

    g(tau) = tau * ||(A A^T + eps*tau I)^{-1} (A x - b)|| = 1.

g is strictly increasing on (0, inf) and the root satisfies
0 < tau <= sigma_max(A)^2 / (||A x - b|| - eps), which gives a bracket for a
safeguarded Newton/bisection hybrid on h(tau) = g(tau)^2 - 1.  In the SVD
basis g only involves the singular values, so evaluations are O(m).  The
projected point lands exactly on the constraint boundary:
||A P(x) - b|| = eps * g(tau).

With eps = 0 (full row-rank A) no root-find is needed and the projection is
the affine one, x - A^T (A A^T)^{-1} (A x - b).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConvergenceError, IllConditionedError, IllPosedError
from .linalg import SpdSolver, SvdFactorization, as_matrix, as_vector, svd

# eps*hi below this fraction of the largest eigenvalue of A A^T makes the
# root-find numerically meaningless; use the affine-projection limit instead.
TINY_EPS_FACTOR = 1e-14

_MAX_ROOT_ITERS = 200
_RANK_REL = 1e-10  # full row-rank test threshold on sigma_m / sigma_1


@dataclass(frozen=True)
class TauBracket:
    """Root of the tau equation together with the bracket that enclosed it."""

    lo: float
    hi: float
    root: float


def _root_newton_bisection(eval_h, hi, tol, what):
    """Find tau in (0, hi] with |g(tau) - 1| <= tol.

    ``eval_h`` maps tau to (g, dh) where dh = d(g^2)/dtau.  g must be
    increasing with g(0+) < 1.  The bracket is expanded (doubling hi) if
    g(hi) < 1, which can only happen through rounding in g.  Returns the root
    and the enclosing upper bound actually used.
    """
    g_hi, _ = eval_h(hi)
    if not np.isfinite(g_hi):
        raise IllConditionedError(f"{what}: non-finite bracket evaluation at tau={hi}")
    lo = 0.0
    expansions = 0
    while g_hi < 1.0:
        if expansions >= 64:
            raise IllConditionedError(f"{what}: root not enclosed by any bracket")
        lo, hi = hi, 2.0 * hi
        g_hi, _ = eval_h(hi)
        expansions += 1
    bound_hi = hi

    tau = hi
    best_tau, best_err = hi, abs(g_hi - 1.0)
    for _ in range(_MAX_ROOT_ITERS):
        g, dh = eval_h(tau)
        if not np.isfinite(g):
            raise IllConditionedError(f"{what}: non-finite evaluation at tau={tau}")
        err = abs(g - 1.0)
        if err < best_err:
            best_tau, best_err = tau, err
        if err <= tol:
            return tau, bound_hi
        if g < 1.0:
            lo = tau
        else:
            hi = tau
        h = g * g - 1.0
        step_ok = np.isfinite(dh) and dh > 0.0
        cand = tau - h / dh if step_ok else 0.5 * (lo + hi)
        if not (lo < cand < hi):
            cand = 0.5 * (lo + hi)
        if cand == tau:
            break
        tau = cand
    raise ConvergenceError(
        f"{what}: |g(tau)-1| = {best_err:.3e} > tol after {_MAX_ROOT_ITERS} iterations",
        best=best_tau,
    )


def solve_tau_spectrum(evals, coeffs, eps, resid_norm, tol):
    """Solve 1 = tau * sqrt(sum_i c_i^2 / (e_i + eps*tau)^2) for tau > 0.

    ``evals`` are the eigenvalues of A A^T and ``coeffs`` the coordinates of
    the residual in the matching eigenbasis, with coordinates along null
    directions already zeroed by the caller.  ``resid_norm`` is the full
    residual norm used in the bracket hi = max(evals) / (resid_norm - eps).
    """
    if resid_norm <= eps:
        raise ValueError("solve_tau called on a feasible point")
    evals = np.asarray(evals, dtype=np.float64).ravel()
    coeffs = np.asarray(coeffs, dtype=np.float64).ravel()
    keep = coeffs != 0.0
    e = evals[keep]
    c2 = coeffs[keep] ** 2
    if e.size == 0:
        raise IllConditionedError(
            "residual has no component along the constraint operator's range"
        )
    e_max = float(evals.max())
    hi = e_max / (resid_norm - eps)

    if eps == 0.0:
        norm_w = np.sqrt(float(np.sum(c2 / e**2)))
        return TauBracket(lo=0.0, hi=hi, root=1.0 / norm_w)

    def eval_h(tau):
        den = e + eps * tau
        s = float(np.sum(c2 / den**2))
        g = tau * np.sqrt(s)
        dh = 2.0 * tau * float(np.sum(c2 * e / den**3))
        return g, dh

    root, bound_hi = _root_newton_bisection(eval_h, hi, tol, "tau solve")
    return TauBracket(lo=0.0, hi=bound_hi, root=root)


def solve_tau(svd_a, r, eps, tol):
    """Root of the tau equation, evaluated in the SVD basis of A.

    ``r`` is the residual A x - b with ||r|| > eps.
    """
    if not isinstance(svd_a, SvdFactorization):
        raise TypeError("solve_tau expects an SvdFactorization")
    r = as_vector(r, "residual")
    c = svd_a.u.T @ r
    c = np.where(svd_a.rank_mask, c, 0.0)
    return solve_tau_spectrum(
        svd_a.sigma**2, c, eps, float(np.linalg.norm(r)), tol
    )


class ConstraintSpec:
    """Constraint data (A, b, eps) with cached factorizations.

    Structural requirements are validated at construction: eps >= 0, A has
    full row rank when eps = 0, and b lies in the image of A.  Instances are
    immutable apart from lazily built caches and are safe to share.
    """

    def __init__(self, a, b, eps, cache_svd=True, cache_spd=None):
        self.a = as_matrix(a, "A")
        self.b = as_vector(b, "b")
        if self.a.shape[0] != self.b.shape[0]:
            raise ValueError(
                f"A has {self.a.shape[0]} rows but b has length {self.b.shape[0]}"
            )
        eps = float(eps)
        if not np.isfinite(eps) or eps < 0.0:
            raise ValueError(f"eps must be a nonnegative finite scalar, got {eps}")
        self.eps = eps

        fac = svd(self.a)
        sig = fac.sigma
        m, n = self.a.shape
        if eps == 0.0:
            if m > n or sig[-1] <= _RANK_REL * sig[0]:
                raise IllPosedError(
                    f"eps = 0 requires full row rank; {m}x{n} matrix has "
                    f"sigma_min/sigma_max = "
                    f"{0.0 if sig[0] == 0 else sig[-1] / sig[0]:.3e}"
                )
        u_act = fac.u[:, fac.rank_mask]
        out_of_image = self.b - u_act @ (u_act.T @ self.b)
        if np.linalg.norm(out_of_image) > 1e-8 * (1.0 + np.linalg.norm(self.b)):
            raise IllPosedError(
                "b is not in the image of A "
                f"(out-of-image norm {np.linalg.norm(out_of_image):.3e})"
            )

        self._op_norm_sq = float(sig[0] ** 2)
        self._svd = fac if cache_svd else None
        self._spd = None
        if cache_spd is None:
            cache_spd = eps == 0.0
        if cache_spd:
            self.ensure_spd_cache()

    @property
    def m(self):
        return self.a.shape[0]

    @property
    def n(self):
        return self.a.shape[1]

    @property
    def svd(self):
        return self._svd

    @property
    def op_norm_sq(self):
        """sigma_max(A)^2."""
        return self._op_norm_sq

    @property
    def has_spd_cache(self):
        return self._spd is not None

    def ensure_spd_cache(self):
        """Factor A A^T once for repeated eps = 0 projections."""
        if self._spd is None:
            self._spd = SpdSolver(self.a @ self.a.T)
        return self._spd

    def violation(self, x):
        return float(np.linalg.norm(self.a @ x - self.b))

    def is_feasible(self, x):
        return self.violation(x) <= self.eps


def project_eps_zero(spec, x):
    """Affine projection x - A^T (A A^T)^{-1} (A x - b) through the cached factor."""
    if spec.eps != 0.0:
        raise ConfigError("project_eps_zero requires a spec with eps = 0")
    if not spec.has_spd_cache:
        raise ConfigError("project_eps_zero requires the cached A A^T factorization")
    x = as_vector(x, "x")
    r = spec.a @ x - spec.b
    return x - spec.a.T @ spec._spd.solve(r)


def _project_svd(spec, x, r, v, tol):
    fac = spec.svd
    sig = fac.sigma
    act = fac.rank_mask
    c = fac.u.T @ r
    c = np.where(act, c, 0.0)
    eps = spec.eps

    if eps == 0.0:
        w = np.where(act, c / np.where(act, sig, 1.0) ** 2, 0.0)
        return x - fac.v @ (sig * w)

    hi = spec.op_norm_sq / (v - eps)
    if eps * hi < TINY_EPS_FACTOR * spec.op_norm_sq:
        # eps*tau below rounding: project onto the affine set, then move back
        # along the projection direction until the boundary is met exactly.
        w = np.where(act, c / np.where(act, sig, 1.0) ** 2, 0.0)
        u0 = x - fac.v @ (sig * w)
        return u0 + (eps / v) * (x - u0)

    bracket = solve_tau_spectrum(sig**2, c, eps, v, tol)
    den = sig**2 + eps * bracket.root
    w = np.where(act, c / den, 0.0)
    return x - fac.v @ (sig * w)


def _project_dense(spec, x, r, v, tol):
    """Projection without an SVD cache: each g evaluation is an SPD solve."""
    a = spec.a
    m = spec.m
    gram = a @ a.T
    eps = spec.eps

    if eps == 0.0:
        return x - a.T @ spec.ensure_spd_cache().solve(r)

    hi = spec.op_norm_sq / (v - eps)
    if eps * hi < TINY_EPS_FACTOR * spec.op_norm_sq:
        y0, *_ = np.linalg.lstsq(gram, r, rcond=None)
        u0 = x - a.T @ y0
        return u0 + (eps / v) * (x - u0)

    eye = np.eye(m)

    def eval_h(tau):
        solver = SpdSolver(gram + (eps * tau) * eye)
        y = solver.solve(r)
        ny2 = float(y @ y)
        g = tau * np.sqrt(ny2)
        dh = 2.0 * tau * ny2 - 2.0 * eps * tau**2 * float(y @ solver.solve(y))
        return g, dh

    root, _ = _root_newton_bisection(eval_h, hi, tol, "tau solve (dense)")
    y = SpdSolver(gram + (eps * root) * eye).solve(r)
    return x - a.T @ y


def project(spec, x, tol=1e-12):
    """Project x onto {u : ||A u - b|| <= eps}.

    Feasible points are returned unchanged.  For infeasible points the result
    lies on the constraint boundary up to the tau tolerance:
    ||A P(x) - b|| = eps within eps*tol plus rounding.
    """
    x = as_vector(x, "x")
    if x.shape[0] != spec.n:
        raise ValueError(f"x has length {x.shape[0]}, expected {spec.n}")
    r = spec.a @ x - spec.b
    v = float(np.linalg.norm(r))
    if v <= spec.eps:
        return x
    if spec.svd is not None:
        return _project_svd(spec, x, r, v, tol)
    return _project_dense(spec, x, r, v, tol)
