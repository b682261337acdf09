"""Command-line driver: run experiments, average norms, solve fields, audit algebras."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import averaging, conformal_solver as solver, lie_algebra, manifold as mf
from .experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    csv_summary,
    emit_report,
    report_to_dict,
    run_experiment,
)
from .norm_core import norm_from_dict


def build_parser():
    parser = argparse.ArgumentParser(
        prog="finslerfields",
        description="Conformal/Killing field experiments on model Finsler manifolds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run named experiments and emit reports")
    run_p.add_argument("names", nargs="*", help="experiment names (default: all)")
    run_p.add_argument("--config", type=Path, help="JSON config file")
    run_p.add_argument("--out", type=Path, default=Path("reports"))
    run_p.add_argument("--resolution", type=int)
    run_p.add_argument("--degree", type=int)
    run_p.add_argument("--tol", type=float)
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--parallel", action="store_true",
                       help="run independent experiments concurrently")

    avg_p = sub.add_parser("average", help="averaged norm of a serialized Minkowski norm")
    avg_p.add_argument("--config", type=Path, required=True,
                       help="JSON file with a norm record {family, dim, ...}")
    avg_p.add_argument("--resolution", type=int, default=1024)
    avg_p.add_argument("--table", type=Path,
                       help="also dump the quadrature nodes and weights as CSV")

    solve_p = sub.add_parser("solve-fields", help="solve one field/basis configuration")
    solve_p.add_argument("--config", type=Path, required=True)
    solve_p.add_argument("--mode", choices=["killing", "conformal"], default="conformal")
    solve_p.add_argument("--out", type=Path)

    lie_p = sub.add_parser("lie-report", help="diagnostics for serialized structure constants")
    lie_p.add_argument("--constants", type=Path, required=True)
    lie_p.add_argument("--out", type=Path)
    return parser


def _load_json(path):
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def _experiment_config(name, file_cfg, args):
    fields = {}
    for key in ("seed", "degree", "resolution", "x_density", "sphere_points",
                "n_directions", "n_extra_directions", "tol_ratio", "metric_params"):
        if key in file_cfg:
            fields[key] = file_cfg[key]
    if args.resolution is not None:
        fields["resolution"] = args.resolution
    if args.degree is not None:
        fields["degree"] = args.degree
    if args.tol is not None:
        fields["tol_ratio"] = args.tol
    if args.seed is not None:
        fields["seed"] = args.seed
    return ExperimentConfig(name=name, **fields)


def cmd_run(args):
    file_cfg = _load_json(args.config) if args.config else {}
    names = args.names or file_cfg.get("experiments") or list(EXPERIMENTS)
    unknown = [n for n in names if n not in EXPERIMENTS]
    if unknown:
        print(f"unknown experiments: {unknown}", file=sys.stderr)
        return 2
    args.out.mkdir(parents=True, exist_ok=True)

    def run_one(name):
        return run_experiment(name, _experiment_config(name, file_cfg, args))

    if args.parallel:
        with ThreadPoolExecutor() as pool:
            reports = list(pool.map(run_one, names))
    else:
        reports = [run_one(name) for name in names]

    for report in reports:
        emit_report(report, args.out / f"{report.name}.json", fmt="json")
        status = "pass" if report.passed else "FAIL"
        dims = ""
        if report.killing_dim is not None:
            dims = f" killing={report.killing_dim} conformal={report.conformal_dim}"
        print(f"{report.name}: {status}{dims} ({report.wall_time_s:.2f}s)")
    csv_summary(reports, args.out / "summary.csv")
    return 0 if all(r.passed for r in reports) else 1


def cmd_average(args):
    norm = norm_from_dict(_load_json(args.config))
    quadrature = averaging.sample_indicatrix(norm, args.resolution)
    coarse = averaging.averaged_norm(norm, quadrature).matrix
    fine = averaging.average(norm, 2 * args.resolution).matrix
    diff = float(np.max(np.abs(fine - coarse)))
    print("averaged matrix at resolution", args.resolution)
    for row in coarse:
        print("  " + "  ".join(f"{v: .12e}" for v in row))
    print(f"refinement difference vs resolution {2 * args.resolution}: {diff:.3e}")
    if args.table:
        header = ",".join([f"y{i + 1}" for i in range(norm.dim)] + ["weight"])
        rows = [",".join(f"{v:.12e}" for v in row) for row in quadrature.to_table()]
        args.table.write_text("\n".join([header] + rows) + "\n")
        print(f"quadrature table written to {args.table}")
    return 0


def _field_from_config(cfg):
    manifold_cfg = cfg["manifold"]
    metric_cfg = cfg["metric"]
    kind = manifold_cfg["kind"]
    if kind == "flat_torus":
        torus = mf.FlatTorus(np.array(manifold_cfg.get("lattice", np.eye(2).tolist())))
        if metric_cfg["kind"] == "constant_norm":
            base = mf.ConstantNormField(torus, norm_from_dict(metric_cfg["norm"]))
        else:
            raise ValueError(f"unsupported torus metric {metric_cfg['kind']!r}")
        if "rescale" in metric_cfg:
            r = metric_cfg["rescale"]
            rho = mf.TorusFourierScalar(
                torus,
                const=r.get("const", 0.0),
                terms=[(tuple(t[0]), t[1], t[2]) for t in r.get("terms", [])],
            )
            base = mf.ConformalRescaleField(base, rho)
        basis = solver.torus_basis(torus, cfg.get("degree", 2))
        return base, basis
    if kind == "sphere":
        sphere = mf.Sphere2(manifold_cfg.get("radius", 1.0))
        if metric_cfg["kind"] != "round":
            raise ValueError(f"unsupported sphere metric {metric_cfg['kind']!r}")
        field = mf.RoundSphereField(sphere)
        basis = solver.sphere_basis(sphere, cfg.get("degree", 2))
        return field, basis
    raise ValueError(f"unsupported manifold {kind!r}")


def cmd_solve_fields(args):
    cfg = _load_json(args.config)
    field, basis = _field_from_config(cfg)
    solver_cfg = solver.SolverConfig(**cfg.get("solver", {}))
    report = solver.solve_fields(field, basis, mode=args.mode, config=solver_cfg)
    doc = {
        "experiment": cfg.get("name", "solve-fields"),
        "manifold": cfg["manifold"],
        "metric": cfg["metric"],
        "basis_degree": basis.degree,
        "killing_dim": report.killing_dim,
        "conformal_dim": report.conformal_dim,
        "singular_values": [float(s) for s in (
            report.conformal_singular_values
            if report.conformal_singular_values is not None
            else report.killing_singular_values
        )],
        "residuals": report.residuals,
        "gap": None if np.isinf(report.gap) else report.gap,
        "flags": report.flags,
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        args.out.write_text(text + "\n")
    print(text)
    return 0


def cmd_lie_report(args):
    algebra = lie_algebra.LieAlgebraSC.from_dict(_load_json(args.constants))
    gram = lie_algebra.killing_gram(algebra)
    pos, neg, zero = lie_algebra.killing_signature(algebra)
    decomposition = lie_algebra.compact_decomposition_check(algebra)
    doc = {
        "dim": algebra.dim,
        "derived_series": lie_algebra.derived_series(algebra),
        "solvable_derived_series": lie_algebra.is_solvable(algebra),
        "solvable_cartan": lie_algebra.cartan_solvability(algebra),
        "killing_gram_eigenvalues": np.linalg.eigvalsh(gram).tolist(),
        "killing_signature": [pos, neg, zero],
        "radical_dim": int(lie_algebra.killing_radical(algebra).shape[0]),
        "compact_type": decomposition.compact_type,
        "derived_dim": decomposition.derived_dim,
        "center_dim": decomposition.center_dim,
        "direct_sum": decomposition.direct_sum,
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        args.out.write_text(text + "\n")
    print(text)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {
        "run": cmd_run,
        "average": cmd_average,
        "solve-fields": cmd_solve_fields,
        "lie-report": cmd_lie_report,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
