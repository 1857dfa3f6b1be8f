"""Experiment orchestration: config validation, seeded pipeline runs and
report emission.

Configs are JSON with nested keys; reports are a sorted-key JSON summary
plus CSV detail files.  Same config and seed give a byte-identical
summary, which is what ``replay`` checks.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from . import cantor as cantor_mod
from . import construction as cons
from . import density as density_mod
from . import diophantine as dio
from . import eigenfields as ef
from . import ergodicity as ergo
from . import operators as ops
from . import steinhaus as st
from .linspace import DualFunctional, StateVector, basis_vector

KNOWN_PIPELINES = (
    "khinchine",
    "diophantine",
    "syndetic",
    "ergodicity",
    "cantor",
    "construct",
    "density",
    "invariance",
)


@dataclass
class ExperimentConfig:
    seed: int
    dimension: int
    operator: dict
    family: dict
    pipelines: dict

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "dimension": self.dimension,
            "operator": self.operator,
            "family": self.family,
            "pipelines": self.pipelines,
        }


def validate_config(text: str):
    """Parse a config; returns (ExperimentConfig or None, list of errors)."""
    errors = []
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        return None, [f"invalid JSON: {exc}"]
    if not raw:
        return None, ["empty config"]
    if "seed" not in raw:
        errors.append("missing seed (runs must be reproducible)")
    elif not isinstance(raw["seed"], int):
        errors.append("seed must be an integer")
    dim = raw.get("dimension", 64)
    if not isinstance(dim, int) or dim < 1:
        errors.append("dimension must be >= 1")
    operator = raw.get("operator", {"kind": "scaled_backward_shift", "weight": 2.0})
    kind = operator.get("kind")
    if kind not in ("scaled_backward_shift", "perturbed_diagonal"):
        errors.append(f"unknown operator kind {kind!r}")
    elif kind == "scaled_backward_shift" and not operator.get("weight", 0) > 1:
        errors.append("shift weight must be > 1")
    elif kind == "perturbed_diagonal" and operator.get("eps", 0) < 0:
        errors.append("perturbation eps must be >= 0")
    family = raw.get("family", {"count": 256})
    if not isinstance(family.get("count", 256), int) or family.get("count", 256) < 1:
        errors.append("family count must be a positive integer")
    pipelines = raw.get("pipelines", {})
    if not pipelines:
        errors.append("no pipelines requested")
    for name, params in pipelines.items():
        if name not in KNOWN_PIPELINES:
            errors.append(f"unknown pipeline {name!r}")
            continue
        for key in ("eta", "radius", "coefficient", "tolerance"):
            if key in params and not params[key] > 0:
                errors.append(f"pipelines.{name}.{key} must be positive")
    if errors:
        return None, errors
    return ExperimentConfig(raw["seed"], dim, operator, family, pipelines), []


def _make_operator(cfg: ExperimentConfig) -> ops.OperatorSpec:
    if cfg.operator["kind"] == "scaled_backward_shift":
        return ops.make_scaled_backward_shift(cfg.operator["weight"], cfg.dimension)
    angles = ef.qindependent_angles(cfg.dimension)
    return ops.make_perturbed_diagonal(angles, cfg.operator.get("eps", 0.1), cfg.dimension)


def _make_family(cfg: ExperimentConfig, op) -> ef.EigenFamily:
    if op.kind == ops.PERTURBED_DIAGONAL:
        return ef.diagonal_family(op)
    return ef.sample_2B_family(op.weight, cfg.dimension, cfg.family.get("count", 256))


def _rng(cfg: ExperimentConfig, pipeline: str) -> np.random.Generator:
    # disjoint deterministic streams per pipeline
    return np.random.default_rng([cfg.seed, KNOWN_PIPELINES.index(pipeline)])


def _complexes(rows) -> list:
    return [complex(re, im) for re, im in rows]


def run_experiment(cfg: ExperimentConfig, out_dir, horizon_override=None) -> int:
    """Run every configured pipeline; write summary.json and CSV details.

    Returns 0 iff every pipeline's PASS criterion holds.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    op = _make_operator(cfg)
    family = _make_family(cfg, op)
    summary = {"config": cfg.to_dict(), "results": {}}
    all_pass = True
    construct_ctx = None

    for name in KNOWN_PIPELINES:
        if name not in cfg.pipelines:
            continue
        params = dict(cfg.pipelines[name])
        if horizon_override is not None and "horizon" in params:
            params["horizon"] = horizon_override
        runner = _RUNNERS[name]
        result, extra_ctx = runner(cfg, op, family, params, _rng(cfg, name), out, construct_ctx)
        if extra_ctx is not None:
            construct_ctx = extra_ctx
        summary["results"][name] = result
        all_pass = all_pass and result["passed"]

    summary["passed"] = all_pass
    (out / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n"
    )
    return 0 if all_pass else 1


def _run_khinchine(cfg, op, family, params, rng, out, ctx):
    spec = params.get("coefficients", {"equal": 100})
    if isinstance(spec, dict):
        coeffs = np.ones(spec["equal"], dtype=complex)
    else:
        coeffs = np.asarray(_complexes(spec))
    report = st.khinchine_report(coeffs, params.get("trials", 10**5), rng, seed=cfg.seed)
    passed = 0 < report.estimate <= 1.0
    return (
        {
            "estimate": report.estimate,
            "stderr": report.stderr,
            "trials": report.trials,
            "passed": passed,
        },
        None,
    )


def _run_diophantine(cfg, op, family, params, rng, out, ctx):
    eta = params.get("eta", 0.05)
    k = params.get("angle_count", 2)
    per_angle = params.get("targets_per_angle", 4)
    p_max = params.get("p_max", 10**6)
    angles = ef.qindependent_angles(k)
    grid = [np.exp(2j * np.pi * (i + 0.5) / per_angle) for i in range(per_angle)]
    solved = []
    passed = True
    for flat in range(per_angle**k):
        idx = np.unravel_index(flat, (per_angle,) * k)
        targets = [grid[i] for i in idx]
        t = dio.TorusTarget(tuple(angles), tuple(targets), eta)
        p = dio.solve_simultaneous(t, p_max)
        ok = p is not None and bool(
            np.all(
                np.abs(np.exp(2j * np.pi * p * np.asarray(angles)) - np.asarray(targets))
                < eta
            )
        )
        passed = passed and ok
        solved.append({"target_cell": [int(i) for i in idx], "p": p, "verified": ok})
    return ({"eta": eta, "solutions": solved, "passed": passed}, None)


def _run_syndetic(cfg, op, family, params, rng, out, ctx):
    angles = ef.qindependent_angles(params.get("angle_count", 2))
    res = dio.syndetic_return_set(
        angles, params.get("eta", 0.1), params.get("horizon", 10**5)
    )
    passed = len(res.times) > 0 and not res.violations
    return (
        {
            "set_size": len(res.times),
            "gap_bound": res.gap_bound,
            "inclusion_violations": len(res.violations),
            "passed": passed,
        },
        None,
    )


def _run_ergodicity(cfg, op, family, params, rng, out, ctx):
    c = _complexes(params.get("c", [[2**-0.5, 0], [2**-0.5, 0]]))
    d = _complexes(params["d"]) if "d" in params else c
    angles = params.get("angles", [1.0, float(np.sqrt(2) % 1)])
    spec = ergo.CorrelationSpec(tuple(c), tuple(d), tuple(angles))
    N = params.get("N", 10**5)
    cesaro_value = cesaro_of_correlation(spec, N)
    witness = ergo.nonergodicity_witness(spec, N)
    ergo.correlation_csv(spec, min(N, 10**4), out / "correlation.csv")
    passed = witness > 0
    return (
        {"cesaro": cesaro_value, "witness": witness, "N": N, "passed": passed},
        None,
    )


def cesaro_of_correlation(spec: ergo.CorrelationSpec, N: int) -> float:
    return ergo.cesaro_average(
        lambda ns: spec.product_term() - spec.diagonal_term() + spec.cross_terms(ns),
        N,
    )


def _run_cantor(cfg, op, family, params, rng, out, ctx):
    depth = params.get("depth", 6)
    count = params.get("seed_count")
    seed_family = family
    if count is not None and count != len(family):
        seed_family = ef.sample_2B_family(op.weight, cfg.dimension, count)
    field = cantor_mod.build_cantor_field(seed_family, depth)
    sep = cantor_mod.verify_cantor_separation(field)
    cantor_mod.field_to_csv(field, out / "cantor_field.csv")
    return (
        {
            "depth": depth,
            "leaves": 2**depth,
            "min_margin": sep.min_margin,
            "passed": sep.passed,
        },
        None,
    )


def _run_construct(cfg, op, family, params, rng, out, ctx):
    targets = [
        cons.ConstructionTarget(
            tuple((complex(re, im), int(i)) for re, im, i in t["coefficients"]),
            t.get("radius", 0.5),
            t.get("reach_power", 1),
        )
        for t in params["targets"]
    ]
    state, phi, report = cons.run_construction(
        op,
        family,
        targets,
        params.get("steps", len(targets)),
        rng,
        trials=params.get("trials", 2000),
        cert_samples=params.get("cert_samples", 200),
        p_max=params.get("p_max", 10**6),
    )
    (out / "construction_state.json").write_text(state.to_json() + "\n")
    result = {
        "blocks": [
            {
                "index": c.index,
                "expected_norm_bound": c.expected_norm_bound,
                "budget": c.budget,
                "visit_rate": c.visit_rate,
                "visit_floor": c.visit_floor,
            }
            for c in report.certificates
        ],
        "total_norm_estimate": report.total_norm_estimate,
        "total_norm_budget": report.total_norm_budget,
        "passed": report.all_passed(),
    }
    return result, (state, phi)


def _run_density(cfg, op, family, params, rng, out, ctx):
    horizon = params.get("horizon", 2 * 10**5)
    results = {}
    passed = True

    # calibration: a single eigen-term whose visits to a ball around itself
    # are controlled by an explicit arc of angles
    coeff = params.get("coefficient", 0.5)
    radius = params.get("radius", 0.3)
    pair0 = family.pairs[params.get("angle_index", 0)]
    x = ef.EigenExpansion(((coeff, pair0),))
    center = StateVector(coeff * pair0.vector.entries)
    rec = density_mod.visit_times(op, x, density_mod.TargetBall(center, radius), horizon)
    arc = 2.0 * np.arcsin(min(radius / (2 * abs(coeff)), 1.0)) / np.pi
    frequency = len(rec.times) / horizon
    results["calibration"] = {
        "arc_length": float(arc),
        "visit_frequency": frequency,
        "error": abs(frequency - arc),
    }
    passed = passed and abs(frequency - arc) < 0.01

    if params.get("use_construction") and ctx is not None:
        state, phi = ctx
        phi_vec = phi.to_vector().entries
        targets = [
            density_mod.TargetBall(
                StateVector(phi_vec + b.center.entries),
                b.radius + 2.0 ** (-(b.index - 1)),
            )
            for b in state.blocks
        ]
        fhc = density_mod.fhc_harness(op, phi, targets, horizon)
        with open(out / "visit_times.csv", "w") as fh:
            fh.write("block,n\n")
            for b, r in zip(state.blocks, fhc.records):
                for n in r.times[:10000]:
                    fh.write(f"{b.index},{n}\n")
        results["construction_orbit"] = {
            "proxies": list(fhc.proxies),
            "passed": fhc.passed,
        }
        passed = passed and fhc.passed
    results["passed"] = passed
    return results, None


def _run_invariance(cfg, op, family, params, rng, out, ctx):
    n_terms = params.get("terms", 32)
    coeffs = 0.5 ** np.arange(1, n_terms + 1)
    series = st.SteinhausSeries(
        tuple((c, p) for c, p in zip(coeffs, family.pairs[:n_terms])), seed=cfg.seed
    )
    probes = [
        DualFunctional(basis_vector(k, cfg.dimension).entries)
        for k in range(params.get("probes", 8))
    ]
    report = st.invariance_gap(op, series, params.get("trials", 10**4), probes, rng)
    passed = report.within(3.0)
    return ({"max_gap": report.max_gap, "passed": passed}, None)


_RUNNERS = {
    "khinchine": _run_khinchine,
    "diophantine": _run_diophantine,
    "syndetic": _run_syndetic,
    "ergodicity": _run_ergodicity,
    "cantor": _run_cantor,
    "construct": _run_construct,
    "density": _run_density,
    "invariance": _run_invariance,
}


@click.group()
def main():
    """Numerical laboratory for linear operator dynamics."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def validate(config_path):
    """Validate a config file; nonzero exit with diagnostics on failure."""
    cfg, errors = validate_config(Path(config_path).read_text())
    if errors:
        for e in errors:
            click.echo(f"error: {e}", err=True)
        sys.exit(1)
    click.echo("config OK")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None, help="override the config seed")
@click.option("--out", "out_dir", type=click.Path(), default="hyperlab-out")
@click.option("--horizon", type=int, default=None, help="override pipeline horizons")
def run(config_path, seed, out_dir, horizon):
    """Run the configured pipelines and write summary.json + CSV details."""
    cfg, errors = validate_config(Path(config_path).read_text())
    if errors:
        for e in errors:
            click.echo(f"error: {e}", err=True)
        sys.exit(2)
    if seed is not None:
        cfg.seed = seed
    status = run_experiment(cfg, out_dir, horizon_override=horizon)
    click.echo(f"summary written to {Path(out_dir) / 'summary.json'}")
    sys.exit(status)


@main.command()
@click.option("--summary", "summary_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), default="hyperlab-replay")
def replay(summary_path, out_dir):
    """Re-run the config embedded in a summary and check byte-identity."""
    old = Path(summary_path).read_text()
    cfg_dict = json.loads(old)["config"]
    cfg, errors = validate_config(json.dumps(cfg_dict))
    if errors:
        for e in errors:
            click.echo(f"error: {e}", err=True)
        sys.exit(2)
    run_experiment(cfg, out_dir)
    new = (Path(out_dir) / "summary.json").read_text()
    if new == old:
        click.echo("replay identical")
        sys.exit(0)
    click.echo("replay DIFFERS from the recorded summary", err=True)
    sys.exit(1)


if __name__ == "__main__":
    main()
