"""Earth mover's distance (Wasserstein-1, L1 ground metric) on a grid.

    min ||m||_1   s.t.   ||div(m) + rho1 - rho0||_F <= eps

The flux is stored as one 2(n-1)-by-n array: rows [0, n-1) hold the vertical
component m1, rows [n-1, 2(n-1)) hold the transposed horizontal component,
with Neumann boundary entries eliminated.  With K the backward-difference
matrix,

    div(m) = K m1 + (K m2t)^T,       adjoint(B) = [K^T B; K^T B^T].

The normal operator B -> K K^T B + B K K^T is a Sylvester map, diagonalized
by conjugation with the left singular vectors U of K: its eigenvalues are
sig_i^2 + sig_j^2 (one of which is zero, which is why eps > 0 is required).
The boundary projection therefore reduces to the same scalar tau equation as
the generic path, solved over those eigenvalues.
"""

import time

import numpy as np

from ..metrics import IterateLog, MetricRow, emd_objective
from ..projection import TINY_EPS_FACTOR, solve_tau_spectrum
from ..prox import shrink


def difference_matrix(n, h=1.0):
    """Backward-difference matrix K of shape (n, n-1) for grid spacing h."""
    k = np.zeros((n, n - 1))
    idx = np.arange(n - 1)
    k[idx, idx] = 1.0 / h
    k[idx + 1, idx] = -1.0 / h
    return k


def emd_divergence(m, h=1.0):
    """Divergence of a stacked flux field, an n-by-n matrix."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] % 2 != 0 or m.shape[0] != 2 * (m.shape[1] - 1):
        raise ValueError(f"flux must have shape (2(n-1), n), got {m.shape}")
    n = m.shape[1]
    k = difference_matrix(n, h)
    return k @ m[: n - 1, :] + (k @ m[n - 1 :, :]).T


def emd_divergence_adjoint(b, h=1.0):
    """Adjoint of the divergence: maps an n-by-n matrix to a stacked flux."""
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError(f"adjoint input must be square, got {b.shape}")
    k = difference_matrix(b.shape[0], h)
    return np.vstack([k.T @ b, k.T @ b.T])


class DivergenceOperator:
    """Divergence, adjoint, and the spectral data of the normal operator."""

    def __init__(self, n, h=1.0):
        self.n = n
        self.h = h
        self.k = difference_matrix(n, h)
        fac = np.linalg.svd(self.k, full_matrices=True)
        self.u = fac[0]
        sig = np.concatenate([fac[1], [0.0]])
        self.evals = sig[:, None] ** 2 + sig[None, :] ** 2
        self.null = self.evals <= 1e-12 * self.evals.max()
        self.op_norm_sq = float(self.evals.max())

    def div(self, m):
        n = self.n
        return self.k @ m[: n - 1, :] + (self.k @ m[n - 1 :, :]).T

    def adjoint(self, b):
        return np.vstack([self.k.T @ b, self.k.T @ b.T])

    def flux_shape(self):
        return (2 * (self.n - 1), self.n)


def project_divergence_ball(z, op, diff, eps, tau_tol=1e-12):
    """Project a flux onto {m : ||div(m) + diff||_F <= eps}."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != op.flux_shape():
        raise ValueError(f"flux has shape {z.shape}, expected {op.flux_shape()}")
    g = op.div(z) + diff
    v = float(np.linalg.norm(g))
    if v <= eps:
        return z
    c = op.u.T @ g @ op.u
    c = np.where(op.null, 0.0, c)

    hi = op.op_norm_sq / (v - eps)
    if eps * hi < TINY_EPS_FACTOR * op.op_norm_sq:
        y0 = np.where(op.null, 0.0, c / np.where(op.null, 1.0, op.evals))
        m0 = z - op.adjoint(op.u @ y0 @ op.u.T)
        return m0 + (eps / v) * (z - m0)

    bracket = solve_tau_spectrum(op.evals, c, eps, v, tau_tol)
    y = np.where(op.null, 0.0, c / (op.evals + eps * bracket.root))
    return z - op.adjoint(op.u @ y @ op.u.T)


def emd_project(z, p, tau_tol=1e-12):
    """Project a flux onto the problem's tolerance set around rho0 - rho1."""
    return project_divergence_ball(z, p.operator, p.rho1 - p.rho0, p.eps, tau_tol)


def run_emd(p, cfg):
    """Project-then-reflect loop from the zero flux.

    Returns (IterateLog, flux, distance) with distance = h * ||m||_1.
    """
    op = p.operator
    diff = p.rho1 - p.rho0
    settle = cfg.settle_tol()
    z = np.zeros(op.flux_shape())
    log = IterateLog()
    m_prev = None
    z_prev = z
    m = z
    t_prev = time.perf_counter()
    for k in range(1, cfg.max_iters + 1):
        m = emd_project(z, p, cfg.tau_tol)
        z_prev, z = z, z + shrink(2.0 * m - z, cfg.alpha) - m
        viol = float(np.linalg.norm(op.div(m) + diff))
        assert viol <= p.eps + 10.0 * cfg.tau_tol * (1.0 + p.eps) + 1e-12
        residual = np.inf if m_prev is None else float(np.linalg.norm(m - m_prev))
        t_now = time.perf_counter()
        if k == 1 or k % cfg.log_every == 0 or k == cfg.max_iters:
            log.append(MetricRow(
                iter=k,
                violation=viol,
                objective=emd_objective(m),
                residual=residual,
                wall_ms=(t_now - t_prev) * 1e3,
            ))
        t_prev = t_now
        if m_prev is not None:
            scale = max(1.0, float(np.linalg.norm(m_prev)))
            z_resid = float(np.linalg.norm(z - z_prev))
            z_scale = max(1.0, float(np.linalg.norm(z_prev)))
            if residual <= cfg.residual_tol * scale and z_resid <= settle * z_scale:
                if log.final.iter != k:
                    log.append(MetricRow(
                        iter=k, violation=viol, objective=emd_objective(m),
                        residual=residual, wall_ms=0.0,
                    ))
                break
        m_prev = m
    distance = p.h * emd_objective(m)
    return log, m, distance
