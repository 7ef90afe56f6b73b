"""Douglas-Rachford driver with exact constraint projection.

One step of the iteration, from governing iterate z:

    x  <- P_C(z)                      (projection; always feasible)
    z' <- z + prox_{alpha f}(2x - z) - x

The projected sequence {x_k} converges to a constrained minimizer of f and
satisfies ||A x_k - b|| <= eps at every k, which run_pp asserts each
iteration and records in the violation column.
"""

import time
from dataclasses import dataclass

import numpy as np

from .metrics import IterateLog, MetricRow
from .projection import project


@dataclass(frozen=True)
class SolverConfig:
    """Step size and stopping configuration shared by all solvers.

    ``alpha`` is the prox step size (any positive value converges; it only
    affects speed).  A run stops when the relative update residual drops to
    ``residual_tol`` or after ``max_iters`` iterations.  ``tau_tol`` is the
    tolerance of the 1D root-find inside the projection.
    """

    alpha: float = 0.1
    max_iters: int = 1000
    residual_tol: float = 1e-5
    tau_tol: float = 1e-12
    log_every: int = 1

    def settle_tol(self):
        """Looser tolerance the governing state must reach before stopping.

        Early iterates of the projected sequence can coincide exactly (for
        instance while a large threshold saturates the prox at zero) even
        though the governing iterate is still moving across the space, so
        the update-residual rule alone can fire spuriously on the first few
        iterations.  Requiring the governing state to settle to
        sqrt(residual_tol) filters those transients without delaying a
        genuine stop, where it is orders of magnitude smaller.
        """
        return np.sqrt(self.residual_tol)

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.residual_tol < 0:
            raise ValueError(f"residual_tol must be >= 0, got {self.residual_tol}")
        if not self.tau_tol > 0:
            raise ValueError(f"tau_tol must be positive, got {self.tau_tol}")
        if self.log_every < 1:
            raise ValueError(f"log_every must be >= 1, got {self.log_every}")


@dataclass(frozen=True)
class SolverState:
    """Governing iterate z, feasible estimate x, and the iteration count."""

    z: np.ndarray
    x: np.ndarray
    k: int


def feasibility_cap(eps, tau_tol):
    """Worst-case boundary overshoot of a tau-tolerance projection."""
    return eps + 10.0 * tau_tol * (1.0 + eps)


def pp_step(state, spec, prox, cfg):
    """One projection + reflected-prox update of the governing iterate."""
    x = project(spec, state.z, cfg.tau_tol)
    z = state.z + prox(2.0 * x - state.z, cfg.alpha) - x
    return SolverState(z=z, x=x, k=state.k + 1)


def run_pp_vector(spec, prox, objective, z0, cfg):
    """Run the iteration on a vector problem until the stopping rule fires.

    Returns (IterateLog, final feasible x).  The objective column is
    evaluated on the feasible iterate x, never on z.
    """
    state = SolverState(z=np.asarray(z0, dtype=np.float64), x=None, k=0)
    log = IterateLog()
    cap = feasibility_cap(spec.eps, cfg.tau_tol)
    settle = cfg.settle_tol()
    x_prev = None
    z_prev = state.z
    t_prev = time.perf_counter()
    for k in range(1, cfg.max_iters + 1):
        state = pp_step(state, spec, prox, cfg)
        x = state.x
        viol = spec.violation(x)
        assert viol <= cap, f"feasibility invariant broken: {viol} > {cap}"
        residual = np.inf if x_prev is None else float(np.linalg.norm(x - x_prev))
        t_now = time.perf_counter()
        if k == 1 or k % cfg.log_every == 0 or k == cfg.max_iters:
            log.append(MetricRow(
                iter=k,
                violation=viol,
                objective=objective(x),
                residual=residual,
                wall_ms=(t_now - t_prev) * 1e3,
            ))
        t_prev = t_now
        if x_prev is not None:
            scale = max(1.0, float(np.linalg.norm(x_prev)))
            z_resid = float(np.linalg.norm(state.z - z_prev))
            z_scale = max(1.0, float(np.linalg.norm(z_prev)))
            if residual <= cfg.residual_tol * scale and z_resid <= settle * z_scale:
                if log.final.iter != k:
                    log.append(MetricRow(
                        iter=k, violation=viol, objective=objective(x),
                        residual=residual, wall_ms=0.0,
                    ))
                break
        x_prev = x
        z_prev = state.z
    return log, state.x


def run_pp(problem, cfg):
    """Dispatch a problem instance to its specialized solver.

    Returns the solver's (IterateLog, solution) pair; the transport solver
    additionally returns the distance estimate.
    """
    from . import problems
    from .apps import bp, emd, smc, spcp

    if isinstance(problem, problems.BpProblem):
        return bp.run_bp(problem, cfg)
    if isinstance(problem, problems.SpcpProblem):
        return spcp.run_spcp(problem, cfg)
    if isinstance(problem, problems.EmdProblem):
        return emd.run_emd(problem, cfg)
    if isinstance(problem, problems.SmcProblem):
        return smc.run_smc(problem, cfg)
    raise TypeError(f"unknown problem type: {type(problem).__name__}")
