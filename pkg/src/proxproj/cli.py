"""Benchmark CLI: generate or load instances, run a solver, emit CSV logs.

Every run writes ``<out>.csv`` (per-iteration metrics), ``<out>.manifest``
(sorted ``key = value`` pairs that fully determine the run, including a hash
of the CSV with the non-reproducible wall_ms column stripped), and prints a
one-line summary ``method iters viol objective residual``.  ``--plot``
additionally renders the three metric columns to ``<out>.png``.

Exit codes: 0 success, 1 solver/data error, 2 usage error.
"""

import argparse
import sys

import numpy as np

from . import baselines, generators, io
from .apps import bp as bp_app
from .apps import emd as emd_app
from .apps import smc as smc_app
from .apps import spcp as spcp_app
from .engine import SolverConfig
from .errors import ProxProjError
from .problems import BpProblem, EmdProblem, SmcProblem, SpcpProblem
from .prox import ObservationMask

_CONFIG_TYPES = {
    "method": str, "seed": int, "alpha": float, "eps": float,
    "max_iters": int, "tol": float, "tau_tol": float, "log_every": int,
    "out": str, "m": int, "n": int, "p": float, "n1": int, "n2": int,
    "rank": int, "sparse_frac": float, "noise_sigma": float, "lam": float,
    "oversample": float, "kind": str, "h": float, "threshold": float,
    "mu": float, "eta": float, "sigma": float, "tau": float,
    "matrix": str, "b": str, "x": str, "source": str, "target": str,
    "observed": str, "mask": str, "rows": str, "seeds": str, "methods": str,
    "spg_mu": float, "plot": bool,
}


def _add_run_flags(sub):
    sub.add_argument("--method", default="pp")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--alpha", type=float, default=None)
    sub.add_argument("--eps", type=float, default=None)
    sub.add_argument("--max-iters", type=int, default=None)
    sub.add_argument("--tol", type=float, default=None,
                     help="relative update-residual stopping tolerance")
    sub.add_argument("--tau-tol", type=float, default=None)
    sub.add_argument("--log-every", type=int, default=None)
    sub.add_argument("--out", default=None)
    sub.add_argument("--config", default=None,
                     help="key = value file; explicit flags take precedence")
    sub.add_argument("--plot", action="store_true", default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="proxproj",
        description="Feasible-iterate solvers and baselines for "
                    "norm-tolerance linearly constrained problems.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_bp = subs.add_parser("bp", help="basis pursuit")
    _add_run_flags(p_bp)
    p_bp.add_argument("--m", type=int, default=None)
    p_bp.add_argument("--n", type=int, default=None)
    p_bp.add_argument("--p", type=float, default=None, help="planted density")
    p_bp.add_argument("--matrix", default=None, help="load A from file")
    p_bp.add_argument("--b", default=None, help="load b from file")

    p_spcp = subs.add_parser("spcp", help="low-rank + sparse decomposition")
    _add_run_flags(p_spcp)
    p_spcp.add_argument("--n1", type=int, default=None)
    p_spcp.add_argument("--n2", type=int, default=None)
    p_spcp.add_argument("--rank", type=int, default=None)
    p_spcp.add_argument("--sparse-frac", type=float, default=None)
    p_spcp.add_argument("--noise-sigma", type=float, default=None)
    p_spcp.add_argument("--lam", type=float, default=None)
    p_spcp.add_argument("--mu", type=float, default=None, help="PSPG smoothing")
    p_spcp.add_argument("--matrix", default=None, help="load M from file")

    p_emd = subs.add_parser("emd", help="earth mover's distance")
    _add_run_flags(p_emd)
    p_emd.add_argument("--kind", default=None,
                       choices=["point_masses", "blobs", "loaded_pgm"])
    p_emd.add_argument("--n", type=int, default=None)
    p_emd.add_argument("--h", type=float, default=None)
    p_emd.add_argument("--source", default=None)
    p_emd.add_argument("--target", default=None)
    p_emd.add_argument("--threshold", type=float, default=None)
    p_emd.add_argument("--sigma", type=float, default=None, help="G-Prox dual step")
    p_emd.add_argument("--tau", type=float, default=None, help="G-Prox primal step")

    p_smc = subs.add_parser("smc", help="stable matrix completion")
    _add_run_flags(p_smc)
    p_smc.add_argument("--n", type=int, default=None)
    p_smc.add_argument("--rank", type=int, default=None)
    p_smc.add_argument("--oversample", type=float, default=None)
    p_smc.add_argument("--noise-sigma", type=float, default=None)
    p_smc.add_argument("--mu", type=float, default=None, help="SPG smoothing")
    p_smc.add_argument("--eta", type=float, default=None, help="VASALM eta")
    p_smc.add_argument("--observed", default=None)
    p_smc.add_argument("--mask", default=None)

    p_proj = subs.add_parser("project", help="project a point onto the constraint set")
    p_proj.add_argument("--matrix", required=True)
    p_proj.add_argument("--b", required=True)
    p_proj.add_argument("--x", required=True)
    p_proj.add_argument("--eps", type=float, required=True)
    p_proj.add_argument("--tol", type=float, default=1e-12)
    p_proj.add_argument("--out", default=None)

    p_gen = subs.add_parser("gen", help="write a generated instance to files")
    p_gen.add_argument("app", choices=["bp", "spcp", "emd", "smc"])
    p_gen.add_argument("--out", required=True, help="output path prefix")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--m", type=int, default=50)
    p_gen.add_argument("--n", type=int, default=200)
    p_gen.add_argument("--p", type=float, default=0.05)
    p_gen.add_argument("--n1", type=int, default=60)
    p_gen.add_argument("--n2", type=int, default=40)
    p_gen.add_argument("--rank", type=int, default=2)
    p_gen.add_argument("--sparse-frac", type=float, default=0.05)
    p_gen.add_argument("--noise-sigma", type=float, default=None)
    p_gen.add_argument("--oversample", type=float, default=5.0)
    p_gen.add_argument("--kind", default="point_masses")
    p_gen.add_argument("--eps", type=float, default=None)

    p_tab = subs.add_parser("smc-table", help="completion summary table")
    p_tab.add_argument("--n", type=int, default=200)
    p_tab.add_argument("--rows", default="5:5,10:4",
                       help="comma list of rank:oversample pairs")
    p_tab.add_argument("--seeds", default="1,2,3,4,5")
    p_tab.add_argument("--methods", default="pp,vasalm,spg")
    p_tab.add_argument("--tol", type=float, default=1e-5)
    p_tab.add_argument("--max-iters", type=int, default=2000)
    p_tab.add_argument("--alpha", type=float, default=None, help="pp step size")
    p_tab.add_argument("--spg-mu", type=float, default=None)
    p_tab.add_argument("--noise-sigma", type=float, default=None)
    p_tab.add_argument("--out", default=None)

    return parser


def _apply_config(args):
    if getattr(args, "config", None) is None:
        return
    entries = io.read_manifest(args.config)
    for key, raw in entries.items():
        attr = key.replace("-", "_")
        if attr not in _CONFIG_TYPES:
            raise ProxProjError(f"unknown config key {key!r}")
        if getattr(args, attr, None) is None:
            conv = _CONFIG_TYPES[attr]
            value = raw.lower() in ("1", "true", "yes") if conv is bool else conv(raw)
            setattr(args, attr, value)


def _fill(args, **defaults):
    for key, value in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)


def _solver_config(args, alpha_default):
    return SolverConfig(
        alpha=args.alpha if args.alpha is not None else alpha_default,
        max_iters=args.max_iters,
        residual_tol=args.tol,
        tau_tol=args.tau_tol,
        log_every=args.log_every,
    )


def _baseline_config(args, **extra):
    return baselines.BaselineConfig(
        alpha=args.alpha,
        max_iters=args.max_iters,
        residual_tol=args.tol,
        log_every=args.log_every,
        **extra,
    )


def _finish_run(args, log, manifest_extra):
    out = args.out
    summary = (
        f"{args.method} {log.final.iter} {log.final.violation:.6e} "
        f"{log.final.objective:.6e} {log.final.residual:.6e}"
    )
    if out:
        csv_path = f"{out}.csv"
        io.write_metrics_csv(csv_path, log)
        manifest = dict(manifest_extra)
        manifest["csv_sha256_no_wall"] = io.metrics_csv_hash(csv_path)
        io.write_manifest(f"{out}.manifest", manifest)
        if args.plot:
            _write_plot(csv_path, f"{out}.png")
    print(summary)
    return 0


def _write_plot(csv_path, png_path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    log = io.read_metrics_csv(csv_path)
    iters = log.column("iter")
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.2))
    for ax, column, label in zip(
        axes,
        ("violation", "objective", "residual"),
        ("violation", "objective", "update residual"),
    ):
        values = log.column(column)
        finite = np.isfinite(values)
        ax.plot(iters[finite], values[finite])
        if (values[finite] > 0).all():
            ax.set_yscale("log")
        ax.set_xlabel("iteration")
        ax.set_title(label)
    fig.tight_layout()
    fig.savefig(png_path, dpi=130)
    plt.close(fig)


def _manifest_base(args, app, extra):
    manifest = {
        "app": app,
        "method": args.method,
        "alpha": "" if args.alpha is None else repr(args.alpha),
        "max_iters": args.max_iters,
        "residual_tol": repr(args.tol),
        "log_every": args.log_every,
    }
    if getattr(args, "seed", None) is not None:
        manifest["seed"] = args.seed
    manifest.update(extra)
    return manifest


def _cmd_bp(args):
    _fill(args, method="pp", seed=1, max_iters=1000, tol=1e-5, tau_tol=1e-12,
          log_every=1, m=50, n=200, p=0.05)
    extra = {}
    if args.matrix:
        if not args.b:
            raise ProxProjError("--matrix requires --b")
        a = io.read_matrix(args.matrix)
        b = io.read_vector(args.b)
        problem = BpProblem(a, b)
        extra["matrix_sha256"] = io.file_sha256(args.matrix)
        extra["b_sha256"] = io.file_sha256(args.b)
    else:
        problem, _ = generators.gen_bp(args.m, args.n, args.p, args.seed)
        extra.update({"m": args.m, "n": args.n, "p": repr(args.p)})
    if args.method == "pp":
        log, _ = bp_app.run_bp(problem, _solver_config(args, 0.1))
    else:
        log, _ = baselines.run_bp_baseline(args.method, problem, _baseline_config(args))
    return _finish_run(args, log, _manifest_base(args, "bp", extra))


def _cmd_spcp(args):
    _fill(args, method="pp", seed=1, max_iters=1000, tol=1e-5, tau_tol=1e-12,
          log_every=1, n1=60, n2=40, rank=2, sparse_frac=0.05)
    extra = {}
    if args.matrix:
        m = io.read_matrix(args.matrix)
        if args.eps is None:
            raise ProxProjError("--eps is required when loading M from a file")
        problem = SpcpProblem(m, lam=args.lam, eps=args.eps)
        extra["matrix_sha256"] = io.file_sha256(args.matrix)
    else:
        sigma = args.noise_sigma if args.noise_sigma is not None else 1e-3
        problem, _ = generators.gen_spcp(
            args.n1, args.n2, args.rank, args.sparse_frac, sigma, args.seed,
            lam=args.lam,
        )
        if args.eps is not None:
            problem = SpcpProblem(problem.m, lam=problem.lam, eps=args.eps)
        extra.update({
            "n1": args.n1, "n2": args.n2, "rank": args.rank,
            "sparse_frac": repr(args.sparse_frac), "noise_sigma": repr(sigma),
        })
    extra["eps"] = repr(problem.eps)
    extra["lam"] = repr(problem.lam)
    if args.method == "pp":
        alpha_default = spcp_app.spcp_default_alpha(problem)
        log, _ = spcp_app.run_spcp(problem, _solver_config(args, alpha_default))
    else:
        log, _ = baselines.run_spcp_baseline(
            args.method, problem, _baseline_config(args, mu=args.mu)
        )
    return _finish_run(args, log, _manifest_base(args, "spcp", extra))


def _cmd_emd(args):
    _fill(args, method="pp", seed=1, max_iters=20000, tol=0.0, tau_tol=1e-12,
          log_every=1, kind="point_masses", n=8, h=1.0, eps=1e-10)
    extra = {"kind": args.kind, "h": repr(args.h), "eps": repr(args.eps)}
    if args.source and args.kind != "loaded_pgm":
        # raw density matrices from files
        rho0 = io.read_matrix(args.source)
        rho1 = io.read_matrix(args.target)
        problem = EmdProblem(rho0, rho1, h=args.h, eps=args.eps)
        extra["source_sha256"] = io.file_sha256(args.source)
        extra["target_sha256"] = io.file_sha256(args.target)
    else:
        params = {"eps": args.eps, "h": args.h}
        if args.kind == "loaded_pgm":
            if not (args.source and args.target):
                raise ProxProjError("loaded_pgm requires --source and --target")
            params["source"] = args.source
            params["target"] = args.target
            if args.threshold is not None:
                params["threshold"] = args.threshold
            extra["source_sha256"] = io.file_sha256(args.source)
            extra["target_sha256"] = io.file_sha256(args.target)
        else:
            extra["n"] = args.n
        problem = generators.gen_emd_pair(args.kind, args.n, params, args.seed)
    if args.method == "pp":
        log, _, distance = emd_app.run_emd(problem, _solver_config(args, 1e-4))
        print(f"distance {distance!r}")
    else:
        log, _ = baselines.run_emd_baseline(
            args.method, problem,
            _baseline_config(args, sigma=args.sigma, tau=args.tau),
        )
    return _finish_run(args, log, _manifest_base(args, "emd", extra))


def _cmd_smc(args):
    _fill(args, method="pp", seed=1, max_iters=2000, tol=1e-5, tau_tol=1e-12,
          log_every=1, n=200, rank=5, oversample=5.0)
    extra = {}
    if args.observed:
        if not args.mask:
            raise ProxProjError("--observed requires --mask")
        observed = io.read_matrix(args.observed)
        keep = io.read_matrix(args.mask) != 0.0
        if args.eps is None:
            raise ProxProjError("--eps is required when loading observations")
        problem = SmcProblem(observed, ObservationMask.from_bool(keep), args.eps)
        extra["observed_sha256"] = io.file_sha256(args.observed)
        extra["mask_sha256"] = io.file_sha256(args.mask)
    else:
        problem, _ = generators.gen_smc(
            args.n, args.rank, args.oversample, args.noise_sigma, args.seed
        )
        extra.update({
            "n": args.n, "rank": args.rank, "oversample": repr(args.oversample),
            "noise_sigma": "auto" if args.noise_sigma is None else repr(args.noise_sigma),
        })
    extra["eps"] = repr(problem.eps)
    if args.method == "pp":
        alpha_default = smc_app.smc_default_alpha(problem)
        log, _ = smc_app.run_smc(problem, _solver_config(args, alpha_default))
    else:
        log, _ = baselines.run_smc_baseline(
            args.method, problem, _baseline_config(args, mu=args.mu, eta=args.eta)
        )
    return _finish_run(args, log, _manifest_base(args, "smc", extra))


def _cmd_project(args):
    from .projection import ConstraintSpec, project

    a = io.read_matrix(args.matrix)
    b = io.read_vector(args.b)
    x = io.read_vector(args.x)
    spec = ConstraintSpec(a, b, args.eps)
    u = project(spec, x, args.tol)
    achieved = spec.violation(u)
    out = args.out or f"{args.x}.projected"
    io.write_vector(out, u)
    print(f"wrote {out}")
    print(f"achieved {achieved!r}")
    return 0


def _cmd_gen(args):
    prefix = args.out
    manifest = {"app": args.app, "seed": args.seed}
    if args.app == "bp":
        problem, xstar = generators.gen_bp(args.m, args.n, args.p, args.seed)
        io.write_matrix(f"{prefix}.A.ppmat", problem.a)
        io.write_vector(f"{prefix}.b.ppvec", problem.b)
        io.write_vector(f"{prefix}.xstar.ppvec", xstar)
        manifest.update({"m": args.m, "n": args.n, "p": repr(args.p)})
    elif args.app == "spcp":
        sigma = args.noise_sigma if args.noise_sigma is not None else 1e-3
        problem, (lstar, sstar) = generators.gen_spcp(
            args.n1, args.n2, args.rank, args.sparse_frac, sigma, args.seed
        )
        io.write_matrix(f"{prefix}.M.ppmat", problem.m)
        io.write_matrix(f"{prefix}.L.ppmat", lstar)
        io.write_matrix(f"{prefix}.S.ppmat", sstar)
        manifest.update({
            "n1": args.n1, "n2": args.n2, "rank": args.rank,
            "sparse_frac": repr(args.sparse_frac), "noise_sigma": repr(sigma),
            "eps": repr(problem.eps), "lam": repr(problem.lam),
        })
    elif args.app == "emd":
        eps = args.eps if args.eps is not None else 1e-10
        problem = generators.gen_emd_pair(args.kind, args.n, {"eps": eps}, args.seed)
        io.write_matrix(f"{prefix}.rho0.ppmat", problem.rho0)
        io.write_matrix(f"{prefix}.rho1.ppmat", problem.rho1)
        manifest.update({"kind": args.kind, "n": args.n, "eps": repr(eps)})
    else:
        problem, m_full = generators.gen_smc(
            args.n, args.rank, args.oversample, args.noise_sigma, args.seed
        )
        io.write_matrix(f"{prefix}.observed.ppmat", problem.m_observed)
        io.write_matrix(
            f"{prefix}.mask.ppmat",
            problem.omega.to_bool(problem.shape).astype(np.float64),
        )
        io.write_matrix(f"{prefix}.M.ppmat", m_full)
        manifest.update({
            "n": args.n, "rank": args.rank, "oversample": repr(args.oversample),
            "eps": repr(problem.eps),
        })
    io.write_manifest(f"{prefix}.manifest", manifest)
    print(f"wrote {prefix}.* instance files")
    return 0


def _cmd_smc_table(args):
    rows = []
    for pair in args.rows.split(","):
        r, ov = pair.split(":")
        rows.append((int(r), float(ov)))
    seeds = [int(s) for s in args.seeds.split(",")]
    methods = args.methods.split(",")

    header = ["rank", "s_over_dr", "s_over_n2"]
    for method in methods:
        header += [f"{method}_iters", f"{method}_viol", f"{method}_objective"]
    lines = [",".join(header)]
    for r, ov in rows:
        dof = smc_app.completion_dof(args.n, r)
        cells = [str(r), repr(ov), repr(round(ov * dof / args.n**2, 4))]
        per_method = {m: ([], [], []) for m in methods}
        for seed in seeds:
            problem, _ = generators.gen_smc(args.n, r, ov, args.noise_sigma, seed)
            for method in methods:
                if method == "pp":
                    alpha = args.alpha or smc_app.smc_default_alpha(problem)
                    cfg = SolverConfig(alpha=alpha, max_iters=args.max_iters,
                                       residual_tol=args.tol)
                    log, _ = smc_app.run_smc(problem, cfg)
                else:
                    cfg = baselines.BaselineConfig(
                        max_iters=args.max_iters, residual_tol=args.tol,
                        mu=args.spg_mu if method == "spg" else None,
                    )
                    log, _ = baselines.run_smc_baseline(method, problem, cfg)
                iters, viols, objs = per_method[method]
                iters.append(log.final.iter)
                viols.append(log.final.violation)
                objs.append(log.final.objective)
        for method in methods:
            iters, viols, objs = per_method[method]
            cells += [
                repr(float(np.mean(iters))),
                repr(float(np.mean(viols))),
                repr(float(np.mean(objs))),
            ]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(f"{args.out}.csv", "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


_COMMANDS = {
    "bp": _cmd_bp,
    "spcp": _cmd_spcp,
    "emd": _cmd_emd,
    "smc": _cmd_smc,
    "project": _cmd_project,
    "gen": _cmd_gen,
    "smc-table": _cmd_smc_table,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return _COMMANDS[args.command](args)
    except ProxProjError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
