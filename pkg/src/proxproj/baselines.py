"""Comparison algorithms sharing the application metric columns.

Basis pursuit:        LB (linearized Bregman), LMM (linearized method of
                      multipliers), PDHG.
Low-rank + sparse:    VASALM (augmented-Lagrangian variant with separate
                      proximal blocks), PSPG (partially smoothed proximal
                      gradient), PG (proximal gradient on the quadratic
                      penalty).
Transport:            PDHG, G-Prox PDHG (Hodge-decomposed flux with
                      divergence-ball projections).
Completion:           SPG (smoothed proximal gradient), VASALM.

Default step parameters reproduce the published comparison settings and are
validated against each scheme's convergence condition.  Configurations that
violate a strict condition are rejected; several published defaults sit
exactly on their stability boundary, which is kept but warned about.
"""

import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .apps.emd import project_divergence_ball
from .errors import ConfigError, ConvergenceError
from .metrics import (
    IterateLog,
    MetricRow,
    bp_objective,
    bp_violation,
    emd_objective,
    smc_objective,
    smc_violation,
    spcp_objective,
    spcp_violation,
)
from .prox import ball_project, mask_project, mask_project_perp, shrink, svt

BP_METHODS = ("lb", "lmm", "pdhg")
SPCP_METHODS = ("vasalm", "pspg", "pg")
EMD_METHODS = ("pdhg", "gprox")
SMC_METHODS = ("spg", "vasalm")


@dataclass(frozen=True)
class BaselineConfig:
    """Step parameters and run control for a baseline method.

    Any parameter left as None is resolved to the published default for the
    method and problem at hand.  ``root_tol`` controls the 1D root-find used
    by PSPG.
    """

    alpha: float = None
    lam: float = None
    mu: float = None
    eta: float = None
    sigma: float = None
    tau: float = None
    root_tol: float = 1e-10
    max_iters: int = 1000
    residual_tol: float = 1e-5
    log_every: int = 1

    def resolved(self, **defaults):
        updates = {k: v for k, v in defaults.items() if getattr(self, k) is None}
        return replace(self, **updates)


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def _check_step(product, bound, what):
    """Reject products beyond the stability bound; warn on the boundary."""
    _require(product > 0, f"{what}: step parameters must be positive")
    if product > bound * (1 + 1e-12):
        raise ConfigError(
            f"{what}: step condition violated ({product:.6g} > {bound:.6g})"
        )
    if product >= bound * (1 - 1e-12):
        warnings.warn(
            f"{what}: step product sits on the convergence boundary "
            f"({product:.6g} = {bound:.6g}); convergence is only guaranteed "
            "for strictly smaller values",
            stacklevel=3,
        )


class _Tracker:
    """Shared per-iteration logging and stopping for all solvers here.

    ``fixed_scale`` switches the residual column to ||dX||/scale with the
    stopping rule residual <= residual_tol; otherwise the residual is
    absolute and the rule is residual <= residual_tol * max(1, ||prev||).
    ``aux`` carries internal variables (duals, accumulators) that must also
    settle, to sqrt(residual_tol), before a stop is accepted: several of
    these schemes hold their solution variable exactly still for a few
    iterations while the internal state is still moving.
    """

    def __init__(self, cfg, fixed_scale=None):
        self.cfg = cfg
        self.fixed_scale = fixed_scale
        self.log = IterateLog()
        self._settle = np.sqrt(cfg.residual_tol)
        self._prev = None
        self._prev_norm = None
        self._prev_aux = None
        self._t_prev = time.perf_counter()

    def _diff_norm(self, now, before):
        return np.sqrt(sum(
            float(np.linalg.norm(b - p) ** 2) for b, p in zip(now, before)
        ))

    def step(self, k, blocks, violation, objective, aux=()):
        raw = np.inf if self._prev is None else self._diff_norm(blocks, self._prev)
        residual = raw / self.fixed_scale if self.fixed_scale else raw
        t_now = time.perf_counter()
        cfg = self.cfg
        should_log = k == 1 or k % cfg.log_every == 0 or k == cfg.max_iters
        stop = False
        if self._prev is not None:
            if self.fixed_scale:
                stop = residual <= cfg.residual_tol
            else:
                stop = raw <= cfg.residual_tol * max(1.0, self._prev_norm)
            if stop and aux:
                aux_raw = self._diff_norm(aux, self._prev_aux)
                if self.fixed_scale:
                    stop = aux_raw / self.fixed_scale <= self._settle
                else:
                    aux_scale = max(1.0, np.sqrt(sum(
                        float(np.linalg.norm(p) ** 2) for p in self._prev_aux
                    )))
                    stop = aux_raw <= self._settle * aux_scale
        if should_log or stop:
            self.log.append(MetricRow(
                iter=k, violation=violation, objective=objective,
                residual=residual, wall_ms=(t_now - self._t_prev) * 1e3,
            ))
        self._t_prev = t_now
        self._prev = tuple(np.array(b, copy=True) for b in blocks)
        self._prev_norm = np.sqrt(sum(float(np.linalg.norm(b) ** 2) for b in blocks))
        self._prev_aux = tuple(np.array(a, copy=True) for a in aux)
        return stop


# ---------------------------------------------------------------------------
# basis pursuit
# ---------------------------------------------------------------------------

def run_bp_baseline(method, p, cfg=None):
    """Run one of the basis pursuit baselines; returns (IterateLog, x)."""
    if method not in BP_METHODS:
        raise ConfigError(f"unknown basis pursuit baseline {method!r}")
    cfg = cfg or BaselineConfig()
    a, b = p.a, p.b
    norm_sq = float(np.linalg.svd(a, compute_uv=False)[0] ** 2)

    if method == "lb":
        cfg = cfg.resolved(alpha=2.0 / norm_sq, mu=2.0 * norm_sq)
        _check_step(cfg.alpha * norm_sq, 2.0, "linearized Bregman")
        return _run_lb(a, b, cfg)
    if method == "lmm":
        cfg = cfg.resolved(lam=100.0 * norm_sq)
        cfg = cfg.resolved(alpha=1.0 / (cfg.lam * norm_sq))
        _check_step(cfg.alpha * cfg.lam * norm_sq, 1.0, "linearized multipliers")
        return _run_lmm(a, b, cfg)
    cfg = cfg.resolved(lam=100.0 * norm_sq)
    cfg = cfg.resolved(alpha=1.0 / (cfg.lam * norm_sq))
    _check_step(cfg.alpha * cfg.lam * norm_sq, 1.0, "PDHG")
    return _run_bp_pdhg(a, b, cfg)


def _run_lb(a, b, cfg):
    x = np.zeros(a.shape[1])
    v = np.zeros(a.shape[1])
    tracker = _Tracker(cfg)
    for k in range(1, cfg.max_iters + 1):
        v = v - a.T @ (a @ x - b)
        x = shrink(cfg.alpha * v, cfg.alpha * cfg.mu)
        if tracker.step(k, (x,), bp_violation(a, b, x), bp_objective(x),
                        aux=(v,)):
            break
    return tracker.log, x


def _run_lmm(a, b, cfg):
    x = np.zeros(a.shape[1])
    v = np.zeros(a.shape[0])
    tracker = _Tracker(cfg)
    for k in range(1, cfg.max_iters + 1):
        x = shrink(x - cfg.alpha * (a.T @ (v + cfg.lam * (a @ x - b))), cfg.alpha)
        v = v + cfg.lam * (a @ x - b)
        if tracker.step(k, (x,), bp_violation(a, b, x), bp_objective(x),
                        aux=(v,)):
            break
    return tracker.log, x


def _run_bp_pdhg(a, b, cfg):
    x = np.zeros(a.shape[1])
    v = np.zeros(a.shape[0])
    tracker = _Tracker(cfg)
    for k in range(1, cfg.max_iters + 1):
        x_new = shrink(x - cfg.alpha * (a.T @ v), cfg.alpha)
        v = v + cfg.lam * (a @ (2.0 * x_new - x) - b)
        x = x_new
        if tracker.step(k, (x,), bp_violation(a, b, x), bp_objective(x),
                        aux=(v,)):
            break
    return tracker.log, x


# ---------------------------------------------------------------------------
# low-rank + sparse
# ---------------------------------------------------------------------------

def run_spcp_baseline(method, p, cfg=None):
    """Run one of the low-rank + sparse baselines; returns (IterateLog, (L, S))."""
    if method not in SPCP_METHODS:
        raise ConfigError(f"unknown low-rank + sparse baseline {method!r}")
    cfg = cfg or BaselineConfig()
    if method == "vasalm":
        cfg = cfg.resolved(eta=3.0, alpha=1e-5)
        _require(cfg.eta > 2.0, "VASALM requires eta > 2")
        _require(cfg.alpha > 0, "VASALM requires alpha > 0")
        return _run_vasalm_spcp(p, cfg)
    if method == "pspg":
        _require(p.eps > 0, "PSPG requires eps > 0")
        # smoothing weight from a 10% coarse objective scale unless given
        if cfg.mu is None:
            delta = 0.1 * float(np.linalg.svd(p.m, compute_uv=False).sum())
            cfg = cfg.resolved(mu=delta / min(p.shape))
        _require(cfg.mu > 0, "PSPG requires mu > 0")
        return _run_pspg(p, cfg)
    cfg = cfg.resolved(alpha=0.1)
    _require(cfg.alpha > 0, "PG requires alpha > 0")
    return _run_pg_spcp(p, cfg)


def _run_vasalm_spcp(p, cfg):
    m, lam_w, eps = p.m, p.lam, p.eps
    m_norm = max(float(np.linalg.norm(m)), 1e-300)
    xl, xs = m.copy(), np.zeros_like(m)
    dual = np.zeros_like(m)
    a, eta = cfg.alpha, cfg.eta
    tracker = _Tracker(cfg, fixed_scale=m_norm)
    for k in range(1, cfg.max_iters + 1):
        n_blk = ball_project(dual / a + m - xl - xs, 0.0, eps)
        dual_h = dual - a * (xl + xs + n_blk - m)
        xs_new = shrink(xs + dual_h / (a * eta), lam_w / (a * eta))
        xl_new = svt(xl + dual_h / (a * eta), 1.0 / (a * eta))
        dual = dual_h + a * (xl - xl_new) + a * (xs - xs_new)
        xl, xs = xl_new, xs_new
        if tracker.step(k, (xl, xs), spcp_violation(xl, xs, m, eps),
                        spcp_objective(xl, xs, lam_w), aux=(dual,)):
            break
    return tracker.log, (xl, xs)


def _pspg_theta(r_abs, lam_w, mu, eps, hint, tol):
    """Root of || min(lam/theta, |R|/(1 + mu theta)) ||_F = eps (decreasing)."""

    def value(theta):
        combined = np.minimum(lam_w / theta, r_abs / (1.0 + mu * theta))
        return float(np.linalg.norm(combined)) - eps

    hi = max(hint, 1e-12)
    for _ in range(200):
        if value(hi) <= 0:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("PSPG theta bracket expansion failed")
    lo = hi / 2.0
    while lo > 1e-300 and value(lo) < 0:
        lo /= 2.0
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        val = value(mid)
        if abs(val) <= tol:
            return mid
        if val > 0:
            lo = mid
        else:
            hi = mid
    if abs(value(0.5 * (lo + hi))) <= 10 * tol:
        return 0.5 * (lo + hi)
    raise ConvergenceError("PSPG theta root-find did not converge",
                           best=0.5 * (lo + hi))


def _run_pspg(p, cfg):
    m, lam_w, eps, mu = p.m, p.lam, p.eps, cfg.mu
    m_norm = max(float(np.linalg.norm(m)), 1e-300)
    n1, n2 = p.shape
    xl, xs = m.copy(), np.zeros_like(m)
    tracker = _Tracker(cfg, fixed_scale=m_norm)
    for k in range(1, cfg.max_iters + 1):
        s_thr = svt(xl, mu)
        r = m - s_thr
        r_norm = float(np.linalg.norm(r))
        if r_norm <= eps:
            xs = np.zeros_like(m)
            xl = s_thr
        else:
            hint = min(n1 * n2 * lam_w * eps, abs((r_norm - eps) / (mu * eps)))
            theta = _pspg_theta(np.abs(r), lam_w, mu, eps, hint, cfg.root_tol)
            xs = shrink(r, lam_w * (1.0 + mu * theta) / theta)
            xl = (mu * theta * (m - xs) + s_thr) / (1.0 + mu * theta)
        if tracker.step(k, (xl, xs), spcp_violation(xl, xs, m, eps),
                        spcp_objective(xl, xs, lam_w)):
            break
    return tracker.log, (xl, xs)


def _run_pg_spcp(p, cfg):
    m, lam_w = p.m, p.lam
    m_norm = max(float(np.linalg.norm(m)), 1e-300)
    xl, xs = m.copy(), np.zeros_like(m)
    tracker = _Tracker(cfg, fixed_scale=m_norm)
    for k in range(1, cfg.max_iters + 1):
        xl, xs = svt(m - xs, cfg.alpha), shrink(m - xl, cfg.alpha * lam_w)
        if tracker.step(k, (xl, xs), spcp_violation(xl, xs, m, p.eps),
                        spcp_objective(xl, xs, lam_w)):
            break
    return tracker.log, (xl, xs)


# ---------------------------------------------------------------------------
# transport
# ---------------------------------------------------------------------------

def run_emd_baseline(method, p, cfg=None):
    """Run one of the transport baselines; returns (IterateLog, flux)."""
    if method not in EMD_METHODS:
        raise ConfigError(f"unknown transport baseline {method!r}")
    cfg = cfg or BaselineConfig()
    op = p.operator
    if method == "pdhg":
        cfg = cfg.resolved(lam=5.0)
        cfg = cfg.resolved(alpha=1.0 / (cfg.lam * op.op_norm_sq))
        _check_step(cfg.alpha * cfg.lam * op.op_norm_sq, 1.0, "transport PDHG")
        return _run_emd_pdhg(p, cfg)
    cfg = cfg.resolved(tau=1e-4, sigma=1e4)
    _check_step(cfg.sigma * cfg.tau, 1.0, "G-Prox PDHG")
    return _run_gprox(p, cfg)


def _run_emd_pdhg(p, cfg):
    op = p.operator
    diff = p.rho1 - p.rho0
    m = np.zeros(op.flux_shape())
    v_dual = np.zeros((op.n, op.n))
    tracker = _Tracker(cfg)
    for k in range(1, cfg.max_iters + 1):
        m_new = shrink(m - cfg.alpha * op.adjoint(v_dual), cfg.alpha)
        v_dual = v_dual + cfg.lam * (op.div(2.0 * m_new - m) + diff)
        m = m_new
        viol = float(np.linalg.norm(op.div(m) + diff))
        if tracker.step(k, (m,), viol, emd_objective(m), aux=(v_dual,)):
            break
    return tracker.log, m


def _run_gprox(p, cfg):
    op = p.operator
    diff = p.rho1 - p.rho0
    zero_diff = np.zeros((op.n, op.n))
    grad_psi = project_divergence_ball(
        np.zeros(op.flux_shape()), op, diff, p.eps, cfg.root_tol
    )
    p_dual = np.zeros(op.flux_shape())
    u = np.zeros(op.flux_shape())
    tracker = _Tracker(cfg)
    for k in range(1, cfg.max_iters + 1):
        w = p_dual + cfg.sigma * (u + grad_psi)
        p_new = w / np.maximum(1.0, np.abs(w))
        u = u - cfg.tau * project_divergence_ball(
            2.0 * p_new - p_dual, op, zero_diff, p.eps, cfg.root_tol
        )
        p_dual = p_new
        m = u + grad_psi
        viol = float(np.linalg.norm(op.div(m) + diff))
        if tracker.step(k, (m,), viol, emd_objective(m), aux=(p_dual,)):
            break
    return tracker.log, u + grad_psi


# ---------------------------------------------------------------------------
# completion
# ---------------------------------------------------------------------------

def run_smc_baseline(method, p, cfg=None):
    """Run one of the completion baselines; returns (IterateLog, X)."""
    if method not in SMC_METHODS:
        raise ConfigError(f"unknown completion baseline {method!r}")
    cfg = cfg or BaselineConfig()
    if method == "spg":
        _require(p.eps > 0, "SPG requires eps > 0")
        cfg = cfg.resolved(mu=10.0)
        _require(cfg.mu > 0, "SPG requires mu > 0")
        return _run_spg_smc(p, cfg)
    cfg = cfg.resolved(eta=3.0, alpha=1e-2)
    _require(cfg.eta > 2.0, "VASALM requires eta > 2")
    _require(cfg.alpha > 0, "VASALM requires alpha > 0")
    return _run_vasalm_smc(p, cfg)


def _run_spg_smc(p, cfg):
    omega, eps, mu = p.omega, p.eps, cfg.mu
    m_obs = mask_project(p.m_observed, omega)
    m_norm = max(float(np.linalg.norm(m_obs)), 1e-300)
    x = m_obs.copy()
    tracker = _Tracker(cfg, fixed_scale=m_norm)
    for k in range(1, cfg.max_iters + 1):
        s_thr = svt(x, mu)
        w = float(np.linalg.norm(
            m_obs[omega.rows, omega.cols] - s_thr[omega.rows, omega.cols]
        ))
        if w <= eps:
            x = s_thr
        else:
            theta = (w - eps) / (mu * eps)
            blended = (mu * theta * m_obs + s_thr) / (1.0 + mu * theta)
            x = mask_project(blended, omega) + mask_project_perp(s_thr, omega)
        if tracker.step(k, (x,), smc_violation(x, p.m_observed, omega, eps),
                        smc_objective(x)):
            break
    return tracker.log, x


def _run_vasalm_smc(p, cfg):
    omega, eps = p.omega, p.eps
    m_obs = mask_project(p.m_observed, omega)
    m_norm = max(float(np.linalg.norm(m_obs)), 1e-300)
    x = m_obs.copy()
    dual = np.zeros_like(x)
    a, eta = cfg.alpha, cfg.eta
    tracker = _Tracker(cfg, fixed_scale=m_norm)
    for k in range(1, cfg.max_iters + 1):
        w = dual / a + m_obs - x
        w_on = float(np.linalg.norm(w[omega.rows, omega.cols]))
        if w_on > eps:
            n_blk = mask_project(w, omega) * (eps / w_on) + mask_project_perp(w, omega)
        else:
            n_blk = w
        dual_h = dual - a * (x + n_blk - m_obs)
        x_new = svt(x + dual_h / (eta * a), 1.0 / (eta * a))
        dual = dual_h + a * (x - x_new)
        x = x_new
        if tracker.step(k, (x,), smc_violation(x, p.m_observed, omega, eps),
                        smc_objective(x), aux=(dual,)):
            break
    return tracker.log, x
