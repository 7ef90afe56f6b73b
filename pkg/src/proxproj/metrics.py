"""Per-iteration records and the shared metric definitions.

Every solver (the proximal-projection solvers and all baselines) logs the
same three columns for a given application, so cross-solver comparisons read
identical quantities:

    basis pursuit:      ||A x - b||,          ||x||_1,            ||dx||
    low-rank + sparse:  rel. excess over eps, ||L||_* + lam||S||_1, ||dX||_F/||M||_F
    transport:          ||div(m) + d||_F,     ||m||_1,            ||dm||_F
    completion:         rel. excess over eps, ||X||_*,            ||dX||_F/||M||_F

Relative excess is max(||.|| - eps, 0)/eps, or the absolute violation when
eps = 0.
"""

import hashlib
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricRow:
    iter: int
    violation: float
    objective: float
    residual: float
    wall_ms: float


class IterateLog:
    """Ordered per-iteration metric records with strictly increasing index."""

    def __init__(self):
        self.rows = []

    def append(self, row):
        if self.rows and row.iter <= self.rows[-1].iter:
            raise ValueError(
                f"iteration index must increase: {row.iter} after {self.rows[-1].iter}"
            )
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def final(self):
        return self.rows[-1]

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    def content_hash(self):
        """SHA-256 over all columns except wall_ms (wall time is not reproducible)."""
        h = hashlib.sha256()
        for r in self.rows:
            h.update(np.float64(r.iter).tobytes())
            h.update(np.float64(r.violation).tobytes())
            h.update(np.float64(r.objective).tobytes())
            h.update(np.float64(r.residual).tobytes())
        return h.hexdigest()


def relative_excess(value, eps):
    """max(value - eps, 0)/eps, falling back to the raw value when eps = 0."""
    if eps == 0.0:
        return float(value)
    return float(max(value - eps, 0.0) / eps)


def bp_violation(a, b, x):
    return float(np.linalg.norm(a @ x - b))


def bp_objective(x):
    return float(np.abs(x).sum())


def spcp_violation(l, s, m, eps):
    return relative_excess(np.linalg.norm(l + s - m), eps)


def spcp_objective(l, s, lam):
    sig = np.linalg.svd(l, compute_uv=False)
    return float(sig.sum() + lam * np.abs(s).sum())


def emd_violation(div_m, rho0, rho1):
    return float(np.linalg.norm(div_m + rho1 - rho0))


def emd_objective(m):
    return float(np.abs(m).sum())


def smc_violation(x, m_observed, omega, eps):
    diff = x[omega.rows, omega.cols] - m_observed[omega.rows, omega.cols]
    return relative_excess(np.linalg.norm(diff), eps)


def smc_objective(x):
    return float(np.linalg.svd(x, compute_uv=False).sum())
