"""Command-line drivers.

    pimlap validate-kernel --config cfg.txt
    pimlap sweep          --config cfg.txt --out results/ [--jobs 4]
    pimlap poisson        --config cfg.txt --out results/

Exit codes: 0 success, 1 quantitative acceptance failure, 2 usage or
configuration error.  All file writes happen from the main process after
worker joins; identical config and seed give byte-identical CSV output
(the wall_ms timing column aside).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import _backend
from .analysis import eig_error_table
from .assembly import assemble
from .config import RunConfig
from .errors import ConfigError, NumericalFailureError, UnsupportedConfigurationError
from .geometry import builtin_function, sample
from .kernels import validate_kernel
from .solver import solve_poisson

POISSON_RESIDUAL_GATE = 1e-8


def _build_parser():
    p = argparse.ArgumentParser(prog="pimlap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("validate-kernel", "sweep", "poisson"):
        q = sub.add_parser(name)
        q.add_argument("--config", required=True, help="flat dotted-key config file")
        q.add_argument("--out", default=".", help="output directory")
        q.add_argument("--seed", type=int, default=None, help="global seed override")
        q.add_argument(
            "--format",
            action="append",
            choices=["csv", "json", "svg"],
            default=None,
            help="output formats (repeatable; default csv and json)",
        )
        q.add_argument("--jobs", type=int, default=1, help="concurrent sweep cells")
    return p


def _load(args):
    cfg = RunConfig.load(args.config)
    if args.seed is not None:
        cfg.override_seed(args.seed)
    return cfg


def cmd_validate_kernel(cfg: RunConfig, args) -> int:
    spec = cfg.kernel()
    report = validate_kernel(spec, int(cfg.get("kernel.grid_points", 512)))
    for line in report.lines():
        print(line)
    return 0 if report.passed else 1


def _write_report_csv(report, path):
    cols = (
        "n,t,seed,eig_index,lambda_discrete,lambda_reference,"
        "abs_error,subspace_angle,coercivity,discrepancy,wall_ms"
    )
    with open(path, "w") as fh:
        fh.write(cols + "\n")
        for row in report.rows():
            fh.write(
                f"{row['n']},{row['t']:.17g},{row['seed']},{row['eig_index']},"
                f"{row['lambda_discrete']:.17g},{row['lambda_reference']:.17g},"
                f"{row['abs_error']:.17g},{row['subspace_angle']:.17g},"
                f"{row['coercivity']:.17g},{row['discrepancy']:.17g},"
                f"{row['wall_ms']:.6g}\n"
            )


def _write_error_plot(report, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n_max = max(report.grid.n_values)
    ts = sorted({t for (n, t) in report.grid.cells() if n == n_max})
    fig, ax = plt.subplots(figsize=(5, 4))
    for i in range(1, report.count):
        ys = [report.mean_abs_error(n_max, t, i) for t in ts]
        ax.loglog(ts, ys, "o-", label=f"index {i}")
    ax.set_xlabel("t")
    ax.set_ylabel("|lambda_discrete - lambda_reference|")
    ax.set_title(f"eigenvalue error vs t at n={n_max}")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def _acceptance_verdicts(cfg, report):
    """Evaluate the config's acceptance block against the sweep report."""
    verdicts = []
    n_max = max(report.grid.n_values)
    t_min = min(report.grid.t_values)
    rel_max = cfg.get("acceptance.eig_rel_err_max")
    if rel_max is not None:
        indices = cfg._as_list("acceptance.eig_indices", [1])
        for i in indices:
            i = int(i)
            ref = report.reference[i]
            err = report.mean_abs_error(n_max, t_min, i)
            rel = err / abs(ref) if ref else np.inf
            verdicts.append(
                {
                    "name": f"rel_err[{i}] <= {rel_max} at (n={n_max}, t={t_min})",
                    "value": rel,
                    "threshold": float(rel_max),
                    "passed": bool(rel <= float(rel_max)),
                }
            )
    mono = cfg.get("acceptance.monotone_index")
    if mono is not None:
        i = int(mono)
        if report.grid.mode == "zip":
            ladder = report.grid.cells()
        else:
            ladder = [(n_max, t) for t in sorted(report.grid.t_values, reverse=True)]
        errs = [report.mean_abs_error(n, t, i) for (n, t) in ladder]
        ok = all(
            e2 <= e1 + 1e-15 for e1, e2 in zip(errs, errs[1:]) if np.isfinite(e1)
        )
        verdicts.append(
            {
                "name": f"seed-mean abs_error[{i}] nonincreasing along ladder",
                "value": errs,
                "threshold": "nonincreasing",
                "passed": bool(ok),
            }
        )
    return verdicts


def cmd_sweep(cfg: RunConfig, args) -> int:
    formats = args.format or ["csv", "json"]
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    manifold = cfg.manifold()
    density = cfg.density()
    if manifold.shape == "sphere" and density.form != "uniform":
        print(
            "unsupported configuration: nonuniform density on the sphere "
            "has no reference oracle",
            file=sys.stderr,
        )
        return 2
    grid = cfg.grid()
    count = int(cfg.get("sweep.count", 6))
    options = {
        "centers": int(cfg.get("sweep.centers", 256)),
        "discrepancy": bool(cfg.get("sweep.discrepancy", True)),
        "coercivity": bool(cfg.get("sweep.coercivity", True)),
        "dense_threshold": cfg.get("assemble.dense_threshold"),
    }
    report = eig_error_table(grid, count, options=options, jobs=max(1, args.jobs))

    failed_cells = [r for r in report.records if r.status != "ok"]
    verdicts = _acceptance_verdicts(cfg, report)

    if "csv" in formats:
        _write_report_csv(report, outdir / "report.csv")
    if "json" in formats:
        summary = {
            "config": cfg.resolved(),
            "backend": _backend.BACKEND,
            "count": count,
            "reference_eigenvalues": [float(v) for v in report.reference],
            "fits_vs_t": {
                str(i): vars(f) for i, f in report.fits_vs_t.items()
            },
            "fits_vs_n": {
                str(i): vars(f) for i, f in report.fits_vs_n.items()
            },
            "failed_cells": [
                {"n": r.n, "t": r.t, "seed": r.seed, "message": r.message}
                for r in failed_cells
            ],
            "acceptance": verdicts,
        }
        with open(outdir / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
    if "svg" in formats:
        _write_error_plot(report, outdir / "error_vs_t.svg")

    for v in verdicts:
        state = "pass" if v["passed"] else "FAIL"
        print(f"acceptance: {state}: {v['name']} (value {v['value']})")
    if any(not v["passed"] for v in verdicts):
        return 1
    return 0


def cmd_poisson(cfg: RunConfig, args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifold = cfg.manifold()
    density = cfg.density()
    kernel = cfg.kernel()
    n = int(cfg.get("sample.n", 1000))
    seed = int(cfg.get("sample.seed", 0))
    cloud = sample(manifold, density, n, seed)
    t = cfg.bandwidth(n, manifold.intrinsic_dim)
    system = assemble(cloud, kernel, t, storage=cfg.storage_for(n))
    fname = str(cfg.get("poisson.f", "zero"))
    fm = int(cfg.get("poisson.m", 1))
    f = builtin_function(fname, fm, manifold, cloud.points)

    try:
        sol = solve_poisson(system, f)
    except NumericalFailureError as exc:
        hist = exc.diagnostics.get("residual_history", [])
        hist_path = outdir / "poisson_residual_history.txt"
        np.savetxt(hist_path, np.asarray(hist))
        print(f"poisson solve failed: {exc}; residual history at {hist_path}")
        return 1

    d = cloud.points.shape[1]
    with open(outdir / "poisson.csv", "w") as fh:
        fh.write("i," + ",".join(f"x{k+1}" for k in range(d)) + ",f,u\n")
        for i in range(n):
            coords = ",".join(f"{c:.17g}" for c in cloud.points[i])
            fh.write(f"{i},{coords},{f[i]:.17g},{sol.u[i]:.17g}\n")
    summary = {
        "residual": sol.residual,
        "iterations": sol.iterations,
        "rhs_projection_applied": sol.rhs_projection_applied,
        "residual_gate": POISSON_RESIDUAL_GATE,
        "passed": bool(sol.residual < POISSON_RESIDUAL_GATE),
    }
    with open(outdir / "poisson_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"poisson: residual {sol.residual:.3e} in {sol.iterations} iterations "
        f"({'pass' if summary['passed'] else 'FAIL'})"
    )
    return 0 if summary["passed"] else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "validate-kernel":
            return cmd_validate_kernel(cfg, args)
        if args.command == "sweep":
            return cmd_sweep(cfg, args)
        return cmd_poisson(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except UnsupportedConfigurationError as exc:
        print(f"unsupported configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
