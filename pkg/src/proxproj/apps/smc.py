"""Stable matrix completion: min ||X||_* s.t. ||P_Omega(X - M)||_F <= eps.

The selection operator is its own adjoint and idempotent, so the boundary
projection has a closed form: observed entries are pulled toward their
measurements by the exact factor that lands on the tolerance sphere, with
tau = 1/(||P_Omega(Z - M)||_F - eps); unobserved entries pass through.
"""

import time

import numpy as np

from ..metrics import IterateLog, MetricRow, smc_objective, smc_violation
from ..prox import mask_project, svt


def completion_dof(n, r):
    """Degrees of freedom r(2n - r) of an n-by-n rank-r matrix."""
    return r * (2 * n - r)


def smc_project(z, p):
    """Project Z onto {X : ||P_Omega(X - M)||_F <= eps}."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != p.shape:
        raise ValueError(f"Z has shape {z.shape}, expected {p.shape}")
    omega, m, eps = p.omega, p.m_observed, p.eps
    diff_on = z[omega.rows, omega.cols] - m[omega.rows, omega.cols]
    v = float(np.linalg.norm(diff_on))
    if v <= eps:
        return z
    out = z.copy()
    mo = m[omega.rows, omega.cols]
    zo = z[omega.rows, omega.cols]
    out[omega.rows, omega.cols] = ((v - eps) * mo + eps * zo) / v
    return out


def run_smc(p, cfg):
    """Singular-value-threshold reflection followed by the mask projection.

    Returns (IterateLog, X); starts from the observed entries and stops when
    ||X_{k+1} - X_k||_F / ||M||_F reaches residual_tol.
    """
    m_obs = mask_project(p.m_observed, p.omega)
    m_norm = max(float(np.linalg.norm(m_obs)), 1e-300)
    settle = cfg.settle_tol()
    z = m_obs.copy()
    x = m_obs.copy()
    log = IterateLog()
    t_prev = time.perf_counter()
    for k in range(1, cfg.max_iters + 1):
        z_prev = z
        z = z + svt(2.0 * x - z, cfg.alpha) - x
        x_prev = x
        x = smc_project(z, p)
        assert np.linalg.norm(
            x[p.omega.rows, p.omega.cols] - p.m_observed[p.omega.rows, p.omega.cols]
        ) <= p.eps + 1e-10 * (1.0 + p.eps) + 1e-12 * m_norm
        residual = np.inf if k == 1 else float(np.linalg.norm(x - x_prev) / m_norm)
        t_now = time.perf_counter()
        if k == 1 or k % cfg.log_every == 0 or k == cfg.max_iters:
            log.append(MetricRow(
                iter=k,
                violation=smc_violation(x, p.m_observed, p.omega, p.eps),
                objective=smc_objective(x),
                residual=residual,
                wall_ms=(t_now - t_prev) * 1e3,
            ))
        t_prev = t_now
        z_resid = float(np.linalg.norm(z - z_prev) / m_norm)
        if k > 1 and residual <= cfg.residual_tol and z_resid <= settle:
            if log.final.iter != k:
                log.append(MetricRow(
                    iter=k, violation=smc_violation(x, p.m_observed, p.omega, p.eps),
                    objective=smc_objective(x), residual=residual, wall_ms=0.0,
                ))
            break
    return log, x


def smc_default_alpha(p):
    """Threshold scale that works well at desk sizes: ||P_Omega(M)||_F / 10."""
    return float(np.linalg.norm(mask_project(p.m_observed, p.omega))) / 10.0
