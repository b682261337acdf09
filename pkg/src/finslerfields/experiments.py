"""Named experiments reproducing the conformal-rigidity dichotomy at desk scale.

Each experiment builds a model Finsler field, runs the relevant solvers or
averaging routines, and records pass/fail checks against expectations that
live here (not in the config), so a config cannot silently weaken acceptance.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field as dataclass_field, asdict
from pathlib import Path

import numpy as np

from . import averaging, conformal_solver as solver, lie_algebra, manifold as mf
from .norm_core import EuclideanNorm, RandersNorm, scale_norm

ROUNDOFF_FLOOR = 1e-12


@dataclass
class ExperimentConfig:
    name: str = ""
    seed: int = 0
    degree: int = 2
    resolution: int = 1024
    x_density: int = 8
    sphere_points: int = 150
    n_directions: int = 8
    n_extra_directions: int = 2
    tol_ratio: float = 1e-8
    out_dir: str | None = None
    metric_params: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        if self.tol_ratio <= 0:
            raise ValueError("tol_ratio must be positive")
        if self.resolution < 16 or self.x_density < 2 or self.sphere_points < 16:
            raise ValueError("resolution / density settings are too small")

    def solver_config(self, **overrides):
        base = dict(
            x_density=self.x_density,
            sphere_points=self.sphere_points,
            n_directions=self.n_directions,
            n_extra_directions=self.n_extra_directions,
            seed=self.seed,
            tol_ratio=self.tol_ratio,
        )
        base.update(overrides)
        return solver.SolverConfig(**base)


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    comparison: str
    passed: bool


@dataclass
class ExperimentReport:
    name: str
    config: dict
    checks: list
    killing_dim: int | None = None
    conformal_dim: int | None = None
    max_residual: float = 0.0
    gap: float = float("inf")
    singular_values: list = dataclass_field(default_factory=list)
    structure_constants: dict | None = None
    extra: dict = dataclass_field(default_factory=dict)
    wall_time_s: float = 0.0

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


_COMPARATORS = {
    "<=": lambda v, t: v <= t,
    ">=": lambda v, t: v >= t,
    "==": lambda v, t: v == t,
    "<": lambda v, t: v < t,
    ">": lambda v, t: v > t,
}


def _check(checks, name, value, comparison, threshold):
    passed = bool(_COMPARATORS[comparison](value, threshold))
    checks.append(Check(name=name, value=float(value), threshold=float(threshold),
                        comparison=comparison, passed=passed))
    return passed


def _randers_torus_field(config, b=(0.5, 0.0)):
    torus = mf.FlatTorus()
    b = np.asarray(config.metric_params.get("b", b), dtype=float)
    return torus, mf.ConstantNormField(torus, RandersNorm(np.eye(2), b))


# ---------------------------------------------------------------------------
# experiments


def exp_s2_round(config):
    sphere = mf.Sphere2(config.metric_params.get("radius", 1.0))
    field = mf.RoundSphereField(sphere)
    basis = solver.sphere_basis(sphere, degree=config.degree)
    report = solver.solve_fields(field, basis, mode="conformal", config=config.solver_config())

    checks = []
    _check(checks, "killing_dim", report.killing_dim, "==", 3)
    _check(checks, "conformal_dim", report.conformal_dim, "==", 6)
    _check(checks, "conformal spectral gap", report.conformal_gap, ">=", 1e4)
    _check(checks, "verification residual", report.max_residual, "<=", 10.0 * report.tolerance_used)
    return checks, report, {}


def exp_riemannian_torus(config):
    torus = mf.FlatTorus()
    field = mf.ConstantNormField(torus, EuclideanNorm(np.eye(2)))
    basis = solver.torus_basis(torus, config.degree)
    report = solver.solve_fields(field, basis, mode="conformal", config=config.solver_config())

    checks = []
    _check(checks, "killing_dim", report.killing_dim, "==", 2)
    _check(checks, "conformal_dim", report.conformal_dim, "==", 2)
    _check(checks, "verification residual", report.max_residual, "<=", 10.0 * report.tolerance_used)
    return checks, report, {}


def exp_randers_torus(config):
    torus, field = _randers_torus_field(config)
    basis = solver.torus_basis(torus, config.degree)
    report = solver.solve_fields(field, basis, mode="conformal", config=config.solver_config())
    doubled = solver.solve_fields(
        field, basis, mode="conformal",
        config=config.solver_config(x_density=2 * config.x_density),
    )

    checks = []
    _check(checks, "killing_dim", report.killing_dim, "==", 2)
    _check(checks, "conformal_dim", report.conformal_dim, "==", 2)
    rho_norm = (
        float(np.max(np.linalg.norm(report.conformal_factors, axis=1)))
        if report.conformal_dim else 0.0
    )
    _check(checks, "max conformal-factor norm", rho_norm, "<=", 1e-6)
    stable = int(
        doubled.killing_dim == report.killing_dim
        and doubled.conformal_dim == report.conformal_dim
    )
    _check(checks, "dims stable under density doubling", stable, "==", 1)
    _check(checks, "verification residual", report.max_residual, "<=", 10.0 * report.tolerance_used)
    return checks, report, {"doubled_killing_dim": doubled.killing_dim,
                            "doubled_conformal_dim": doubled.conformal_dim}


def _rescaled_torus_experiment(config, base_norm):
    torus = mf.FlatTorus()
    base = mf.ConstantNormField(torus, base_norm)
    rho = mf.TorusFourierScalar(torus, const=2.0, terms=[((1, 0), 1.0, 0.0)])
    field = mf.ConformalRescaleField(base, rho)
    basis = solver.torus_basis(torus, config.degree)
    report = solver.solve_fields(field, basis, mode="killing", config=config.solver_config())

    sample = torus.grid_points(16, offset=(0.23, 0.61))
    if report.killing_dim > 0:
        fields = [basis.combination(c) for c in report.killing_basis]
        transitive = solver.transitivity_check(fields, sample)
        nontransitive_fraction = 1.0 - sum(transitive) / len(transitive)
    else:
        nontransitive_fraction = 1.0

    control_field = mf.ConformalRescaleField(base, mf.ConstantScalar(2.0))
    control = solver.solve_fields(field=control_field, basis=basis, mode="killing",
                                  config=config.solver_config())
    control_fields = [basis.combination(c) for c in control.killing_basis]
    control_transitive = solver.transitivity_check(control_fields, sample)
    control_fraction = sum(control_transitive) / len(control_transitive)

    checks = []
    _check(checks, "killing_dim of rescaled field", report.killing_dim, "==", 1)
    _check(checks, "non-transitive fraction", nontransitive_fraction, ">=", 0.9)
    _check(checks, "control killing_dim (constant factor)", control.killing_dim, "==", 2)
    _check(checks, "control transitive fraction", control_fraction, "==", 1.0)
    _check(checks, "verification residual", report.max_residual, "<=", 10.0 * report.tolerance_used)
    extra = {
        "nontransitive_fraction": nontransitive_fraction,
        "control_killing_dim": control.killing_dim,
        "control_transitive_fraction": control_fraction,
    }
    return checks, report, extra


def exp_rescaled_randers_torus(config):
    b = np.asarray(config.metric_params.get("b", (0.5, 0.0)), dtype=float)
    return _rescaled_torus_experiment(config, RandersNorm(np.eye(2), b))


def exp_rescaled_riemannian_torus(config):
    return _rescaled_torus_experiment(config, EuclideanNorm(np.eye(2)))


def exp_circle_lambda(config):
    circle = mf.Circle()
    varying = mf.CircleNormField(
        circle,
        forward=mf.CircleFourierScalar(circle, const=2.0, terms=[(1, 0.0, 1.0)]),
        backward=mf.CircleFourierScalar(circle, const=1.0),
    )
    constant = mf.CircleNormField(
        circle,
        forward=mf.CircleFourierScalar(circle, const=1.4),
        backward=mf.CircleFourierScalar(circle, const=0.7),
    )
    profile_varying = mf.circle_lambda_profile(varying, grid=256)
    profile_constant = mf.circle_lambda_profile(constant, grid=256)

    checks = []
    _check(checks, "varying-ratio spread", profile_varying.spread, ">", 1.9)
    _check(checks, "varying flagged non-constant", int(not profile_varying.constant), "==", 1)
    _check(checks, "constant-ratio spread", profile_constant.spread, "<=", 1e-10)
    _check(checks, "constant flagged constant", int(profile_constant.constant), "==", 1)
    extra = {
        "varying_spread": profile_varying.spread,
        "constant_spread": profile_constant.spread,
    }
    return checks, None, extra


def exp_averaging_equivariance(config):
    base = RandersNorm(np.eye(2), np.array([0.3, 0.0]))
    angle = np.pi / 6.0
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    composed = RandersNorm(rot.T @ base.a @ rot, rot.T @ base.b)

    res = config.resolution
    rot_res = averaging.verify_equivariance(composed, base, rot, 1.0, resolution=res)
    rot_res_fine = averaging.verify_equivariance(composed, base, rot, 1.0, resolution=2 * res)
    scaled = scale_norm(base, 2.0)
    scale_res = averaging.verify_equivariance(scaled, base, np.eye(2), 2.0, resolution=res)

    checks = []
    _check(checks, "rotation residual", rot_res, "<=", 1e-6)
    halved = int(rot_res_fine <= 0.5 * rot_res or rot_res_fine <= ROUNDOFF_FLOOR)
    _check(checks, "rotation residual halves or hits round-off floor", halved, "==", 1)
    _check(checks, "scaling residual", scale_res, "<=", 1e-8)
    extra = {
        "rotation_residual": rot_res,
        "rotation_residual_refined": rot_res_fine,
        "scaling_residual": scale_res,
    }
    return checks, None, extra


def exp_conformal_algebra_signature(config):
    sphere = mf.Sphere2(1.0)
    field = mf.RoundSphereField(sphere)
    basis = solver.sphere_basis(sphere, degree=config.degree)
    report = solver.solve_fields(
        field, basis, mode="conformal",
        config=config.solver_config(sphere_points=max(100, config.sphere_points // 2)),
    )
    killing_fields = [basis.combination(c) for c in report.killing_basis]
    conformal_fields = [basis.combination(c) for c in report.conformal_basis]
    killing_algebra, _ = solver.extract_structure_constants(killing_fields)
    conformal_algebra, _ = solver.extract_structure_constants(conformal_fields)

    torus, torus_field = _randers_torus_field(config)
    torus_basis = solver.torus_basis(torus, config.degree)
    torus_report = solver.solve_fields(torus_field, torus_basis, mode="killing",
                                       config=config.solver_config())
    torus_fields = [torus_basis.combination(c) for c in torus_report.killing_basis]
    torus_algebra, _ = solver.extract_structure_constants(torus_fields)

    checks = []
    for label, algebra in (("sphere", killing_algebra), ("torus", torus_algebra)):
        worst_b = max(
            lie_algebra.killing_form(algebra, e, e) for e in np.eye(algebra.dim)
        )
        _check(checks, f"{label} killing basis max B(U,U)", worst_b, "<=", 1e-8)
        all_semisimple = int(all(
            lie_algebra.ad_semisimple(algebra, e) for e in np.eye(algebra.dim)
        ))
        _check(checks, f"{label} killing basis ad semisimple", all_semisimple, "==", 1)
    pos, neg, zero = lie_algebra.killing_signature(conformal_algebra)
    _check(checks, "conformal algebra positive eigenvalues", pos, "==", 3)
    _check(checks, "conformal algebra negative eigenvalues", neg, "==", 3)
    extra = {
        "conformal_signature": [pos, neg, zero],
        "torus_killing_dim": torus_report.killing_dim,
    }
    return checks, report, extra, conformal_algebra


EXPERIMENTS = {
    "s2-round": exp_s2_round,
    "riemannian-torus": exp_riemannian_torus,
    "randers-torus": exp_randers_torus,
    "rescaled-randers-torus": exp_rescaled_randers_torus,
    "rescaled-riemannian-torus": exp_rescaled_riemannian_torus,
    "circle-lambda": exp_circle_lambda,
    "averaging-equivariance": exp_averaging_equivariance,
    "conformal-algebra-signature": exp_conformal_algebra_signature,
}


def run_experiment(name, config=None):
    """Run one named experiment and return its report."""
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; known: {sorted(EXPERIMENTS)}")
    config = config or ExperimentConfig(name=name)
    start = time.perf_counter()
    result = EXPERIMENTS[name](config)
    elapsed = time.perf_counter() - start

    algebra = None
    if len(result) == 4:
        checks, solve_report, extra, algebra = result
    else:
        checks, solve_report, extra = result
    report = ExperimentReport(
        name=name,
        config={**asdict(config), "name": name},
        checks=checks,
        extra=extra,
        wall_time_s=elapsed,
    )
    if solve_report is not None:
        report.killing_dim = solve_report.killing_dim
        report.conformal_dim = solve_report.conformal_dim
        report.max_residual = solve_report.max_residual
        report.gap = solve_report.gap
        svals = (
            solve_report.conformal_singular_values
            if solve_report.conformal_singular_values is not None
            else solve_report.killing_singular_values
        )
        report.singular_values = [float(s) for s in svals]
        report.extra.setdefault("flags", list(solve_report.flags))
    if algebra is not None:
        report.structure_constants = algebra.to_dict()
    return report


# ---------------------------------------------------------------------------
# serialization


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        if np.isinf(value):
            return "inf"
        return f"{value:.6e}"
    return str(value)


def report_to_dict(report):
    return {
        "experiment": report.name,
        "config": report.config,
        "checks": [asdict(c) for c in report.checks],
        "killing_dim": report.killing_dim,
        "conformal_dim": report.conformal_dim,
        "max_residual": report.max_residual,
        "gap": None if np.isinf(report.gap) else report.gap,
        "singular_values": report.singular_values,
        "structure_constants": report.structure_constants,
        "extra": _jsonable(report.extra),
        "passed": report.passed,
        "wall_time_s": report.wall_time_s,
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def csv_summary(reports, path=None):
    """Deterministic one-row-per-experiment summary; header-only when empty."""
    lines = ["experiment,killing_dim,conformal_dim,max_residual,gap,pass"]
    for report in reports:
        lines.append(
            ",".join(
                [
                    report.name,
                    _fmt(report.killing_dim),
                    _fmt(report.conformal_dim),
                    _fmt(float(report.max_residual)),
                    _fmt(float(report.gap)),
                    "pass" if report.passed else "fail",
                ]
            )
        )
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def emit_report(report, path, fmt="json"):
    """Write one report as a JSON document or a one-row CSV summary."""
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps(report_to_dict(report), indent=2) + "\n")
    elif fmt == "csv":
        csv_summary([report], path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path
