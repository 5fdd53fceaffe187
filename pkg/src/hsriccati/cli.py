"""Command line entry point.

Subcommands ``solve``, ``synthesize``, ``verify``, ``hardy-demo`` and
``study`` read one JSON config and write ``report.json`` plus CSV tables into
``--out``. Every output carries the config hash, the seed, package versions
and the bounds checklist; no timings or timestamps are recorded, so equal
inputs give byte-identical files.

Exit codes: 0 success, 1 solver failure (including unmet hypotheses),
2 config error, 3 verification FAIL, 4 unstable closed loop.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import (
    ContractionViolation,
    ConvergenceError,
    EigenSolverError,
    HsRiccatiError,
    HypothesesNotMet,
    IntegratorBlowUp,
    QuadratureError,
    SingularSystemError,
    UnstableClosedLoop,
)
from .generators import random_coercive_problem, random_noncoercive_problem, random_plant
from .hardy import (
    HardyPlantSpec,
    build_hardy_plant,
    hs_membership_report,
    sufficient_condition,
    power_profile,
)
from .hinf import ControlPlant, build_riccati_problem, synthesize, verify_gain, write_gain_csv
from .riccati import RiccatiProblem, SolverConfig, newton_kleinman_oracle, solve, solve_coercive
from .triplet import SpectralTriplet

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONFIG = 2
EXIT_FAIL = 3
EXIT_UNSTABLE = 4

HARDY_RESIDUAL_TOL = 1e-8
SOLVER_ERRORS = (ConvergenceError, ContractionViolation, SingularSystemError, EigenSolverError, QuadratureError, IntegratorBlowUp)


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Parsed run: the raw JSON document plus the resolved seed and output directory."""

    command: str
    doc: dict
    seed: int
    output_dir: Path
    modes: int | None = None

    @property
    def config_hash(self) -> str:
        payload = json.dumps(self.doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


# ---------------------------------------------------------------- serialization


def _clean(obj):
    """JSON-ready copy: arrays to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def versions() -> dict:
    return {"hsriccati": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def _provenance(run: RunConfig, checklist: dict) -> dict:
    return {
        "command": run.command,
        "config_hash": run.config_hash,
        "seed": run.seed,
        "versions": versions(),
        "checklist": _clean(checklist),
    }


def _header_lines(run: RunConfig, checklist: dict) -> list[str]:
    prov = _provenance(run, checklist)
    return [f"{k}={json.dumps(v, sort_keys=True)}" for k, v in prov.items()]


def write_report(run: RunConfig, status: str, exit_code: int, checklist: dict, result: dict) -> Path:
    run.output_dir.mkdir(parents=True, exist_ok=True)
    doc = _provenance(run, checklist)
    doc.update({"status": status, "exit_code": exit_code, "config": run.doc, "result": result})
    path = run.output_dir / "report.json"
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")
    return path


def write_table(run: RunConfig, name: str, rows: list[dict], checklist: dict) -> Path:
    """CSV with ``# key=value`` provenance lines and the union of row keys as columns."""
    run.output_dir.mkdir(parents=True, exist_ok=True)
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    path = run.output_dir / name
    with open(path, "w", newline="") as fh:
        for line in _header_lines(run, checklist):
            fh.write(f"# {line}\n")
        wr = csv.writer(fh)
        wr.writerow(cols)
        for r in rows:
            wr.writerow([_cell(r.get(c, "")) for c in cols])
    return path


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(_clean(v), sort_keys=True)
    return v


def history_rows(rep) -> list[dict]:
    return [h.as_dict() for h in rep.history]


def solution_dict(rep) -> dict:
    return {
        "route": rep.route,
        "n": rep.problem.n,
        "P": rep.P.mat,
        "residual_hs": rep.residual_hs,
        "min_eig": rep.min_eig,
        "notes": list(rep.notes),
        "extras": rep.extras,
        "stages": len(rep.history),
    }


# ---------------------------------------------------------------- config parsing


def _matrix(doc, key, shape=None):
    if key not in doc:
        raise ConfigError(f"missing key {key!r}")
    try:
        mat = np.array(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key!r} is not a numeric array: {exc}") from exc
    if mat.ndim == 0:
        mat = mat.reshape(1, 1)
    if shape is not None and mat.shape != shape:
        raise ConfigError(f"{key!r} must have shape {shape}, got {mat.shape}")
    return mat


def parse_triplet(doc) -> SpectralTriplet:
    if not isinstance(doc, dict):
        raise ConfigError("'triplet' must be an object")
    kw = {k: doc[k] for k in ("kappa1", "kappa2") if k in doc}
    if "rho_sq" in doc:
        return SpectralTriplet(np.atleast_1d(np.array(doc["rho_sq"], dtype=float)), **kw)
    if "power_law" in doc:
        pl = doc["power_law"]
        return SpectralTriplet.from_power_law(int(pl["n"]), float(pl.get("c", 1.0)), float(pl.get("s", 1.0)), **kw)
    raise ConfigError("triplet needs 'rho_sq' or 'power_law'")


def parse_solver(doc) -> SolverConfig:
    doc = doc or {}
    if not isinstance(doc, dict):
        raise ConfigError("'solver' must be an object")
    known = {f.name for f in fields(SolverConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown solver keys {sorted(unknown)}")
    return SolverConfig(**doc)


def parse_hardy(doc, modes=None) -> HardyPlantSpec:
    if not isinstance(doc, dict):
        raise ConfigError("'hardy' must be an object")
    known = {f.name for f in fields(HardyPlantSpec)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown hardy keys {sorted(unknown)}")
    kw = dict(doc)
    if modes is not None:
        kw["modes"] = modes
    m = int(kw.get("modes", HardyPlantSpec.modes))
    prof = kw.get("b_profile")
    if isinstance(prof, dict):
        kw["b_profile"] = tuple(power_profile(m, float(prof.get("amp", 1.0)), float(prof.get("decay", 1.0))))
    elif prof is not None:
        kw["b_profile"] = tuple(float(x) for x in np.atleast_1d(prof))
    return HardyPlantSpec(**kw)


def parse_plant(doc, seed: int, modes=None) -> ControlPlant:
    if not isinstance(doc, dict):
        raise ConfigError("'plant' must be an object")
    if "random" in doc:
        n = int(doc["random"].get("n", 4))
        return random_plant(np.random.default_rng(seed), n)
    t = parse_triplet(doc.get("triplet", {}))
    n = t.n
    if "gamma" not in doc:
        raise ConfigError("plant needs 'gamma'")
    b1 = _matrix(doc, "b1")
    b2 = _matrix(doc, "b2")
    c1 = _matrix(doc, "c1")
    return ControlPlant(t, _matrix(doc, "a", (n, n)), b1, b2, c1, float(doc["gamma"]))


def parse_problem(run: RunConfig) -> RiccatiProblem:
    doc = run.doc
    if "problem" in doc:
        p = doc["problem"]
        if not isinstance(p, dict):
            raise ConfigError("'problem' must be an object")
        t = parse_triplet(p.get("triplet", {}))
        n = t.n
        c1 = _matrix(p, "c1") if "c1" in p else None
        f = _matrix(p, "f", (n, n)) if "f" in p else (c1.T @ c1 if c1 is not None else None)
        if f is None:
            raise ConfigError("problem needs 'f' or 'c1'")
        return RiccatiProblem.from_matrices(t, _matrix(p, "a", (n, n)), _matrix(p, "gamma", (n, n)), f, c1=c1)
    if "random" in doc:
        r = doc["random"]
        rng = np.random.default_rng(run.seed)
        family = r.get("family", "coercive")
        n = int(r.get("n", 4))
        if family == "coercive":
            return random_coercive_problem(rng, n)
        if family in ("noncoercive", "noncoercive_diagonal"):
            return random_noncoercive_problem(rng, n, diagonal=family.endswith("diagonal"))
        raise ConfigError(f"unknown random family {family!r}")
    if "plant" in doc:
        return build_riccati_problem(parse_plant(doc["plant"], run.seed))
    if "hardy" in doc:
        return build_riccati_problem(build_hardy_plant(parse_hardy(doc["hardy"], run.modes)))
    raise ConfigError("config needs one of 'problem', 'random', 'plant' or 'hardy'")


def _plant_from(run: RunConfig) -> ControlPlant:
    if "plant" in run.doc:
        return parse_plant(run.doc["plant"], run.seed)
    if "hardy" in run.doc:
        return build_hardy_plant(parse_hardy(run.doc["hardy"], run.modes))
    raise ConfigError("config needs 'plant' or 'hardy'")


def _route(run: RunConfig):
    route = run.doc.get("route")
    if route is not None and route not in ("coercive", "noncoercive", "indefinite"):
        raise ConfigError(f"unknown route {route!r}")
    return route


# ---------------------------------------------------------------- commands


def cmd_solve(run: RunConfig) -> int:
    prob = parse_problem(run)
    cfg = parse_solver(run.doc.get("solver"))
    rep = solve(prob, cfg, route=_route(run))
    result = solution_dict(rep)
    if run.doc.get("oracle", False):
        nk = newton_kleinman_oracle(prob)
        result["oracle_gap_hh"] = float(np.linalg.norm(nk.mat - rep.P.mat))
    code = EXIT_OK if rep.checklist_ok else EXIT_FAIL
    write_table(run, "history.csv", history_rows(rep), rep.bounds_checklist)
    write_report(run, "ok" if code == EXIT_OK else "checklist FAIL", code, rep.bounds_checklist, result)
    return code


def _closed_loop_dict(cl) -> dict:
    return {
        "feedback": cl.feedback_mat,
        "spectral_abscissa": cl.spectral_abscissa,
        "alpha": cl.alpha,
        "spectrum_real": np.sort_complex(cl.spectrum).real,
        "spectrum_imag": np.sort_complex(cl.spectrum).imag,
        "stability_certificate": "spectral abscissa of the truncated closed-loop generator",
    }


def cmd_synthesize(run: RunConfig) -> int:
    plant = _plant_from(run)
    cfg = parse_solver(run.doc.get("solver"))
    cl, rep = synthesize(plant, cfg, route=_route(run))
    result = {"solution": solution_dict(rep), "closed_loop": _closed_loop_dict(cl)}
    code = EXIT_OK if rep.checklist_ok else EXIT_FAIL
    write_table(run, "history.csv", history_rows(rep), rep.bounds_checklist)
    write_report(run, "ok" if code == EXIT_OK else "checklist FAIL", code, rep.bounds_checklist, result)
    return code


def _verify_opts(run: RunConfig) -> dict:
    v = run.doc.get("verify", {}) or {}
    if not isinstance(v, dict):
        raise ConfigError("'verify' must be an object")
    known = {"T", "dt", "defect_tol", "max_refine", "scheme"}
    unknown = set(v) - known
    if unknown:
        raise ConfigError(f"unknown verify keys {sorted(unknown)}")
    return v


def _gain_outputs(run, plant, cl, rep, gain, checklist, extra_result=None):
    result = {"solution": solution_dict(rep), "closed_loop": _closed_loop_dict(cl), "gain": gain.as_dict()}
    if extra_result:
        result.update(extra_result)
    write_table(run, "history.csv", history_rows(rep), checklist)
    write_gain_csv(run.output_dir / "gain.csv", gain.worst, plant.gamma_perf, header=_header_lines(run, checklist))
    return result


def cmd_verify(run: RunConfig) -> int:
    plant = _plant_from(run)
    cfg = parse_solver(run.doc.get("solver"))
    opts = _verify_opts(run)
    cl, rep = synthesize(plant, cfg, route=_route(run))
    gain = verify_gain(cl, plant, seed=run.seed, **opts)
    checklist = dict(rep.bounds_checklist)
    checklist["gain_pass"] = gain.passed
    checklist["energy_defect"] = gain.defect_ok
    run.output_dir.mkdir(parents=True, exist_ok=True)
    result = _gain_outputs(run, plant, cl, rep, gain, checklist)
    code = EXIT_OK if gain.passed else EXIT_FAIL
    write_report(run, gain.verdict, code, checklist, result)
    return code


DEFAULT_HARDY = {"lambda_hardy": 0.1, "modes": 32, "b_profile": {"amp": 1.0, "decay": 1.0}, "gamma_perf": 1.0}


def cmd_hardy_demo(run: RunConfig) -> int:
    spec = parse_hardy(run.doc.get("hardy", DEFAULT_HARDY), run.modes)
    solver_doc = {"residual_tol": 1e-12}
    solver_doc.update(run.doc.get("solver") or {})
    cfg = parse_solver(solver_doc)
    plant = build_hardy_plant(spec)
    lemma = sufficient_condition(spec)
    members = hs_membership_report(plant)
    cl, rep = synthesize(plant, cfg)
    gain = verify_gain(cl, plant, seed=run.seed, **_verify_opts(run))
    checklist = dict(rep.bounds_checklist)
    checklist["coercivity_certificate"] = plant.certificate_min_eig >= -1e-8
    checklist["hardy_residual"] = rep.residual_hs <= HARDY_RESIDUAL_TOL
    checklist["gain_pass"] = gain.passed
    checklist["hs_plateau"] = members["plateau"]
    checklist["lemma_no_contradiction"] = not lemma.contradiction
    hardy_info = {
        "geometry": "unit ball in R^3, radial subspace",
        "spec": {k: getattr(spec, k) for k in spec.__dataclass_fields__},
        "hardy_constant": spec.hardy_const,
        "omega": plant.omega_hardy,
        "certificate_min_eig": plant.certificate_min_eig,
        "c1_weyl": spec.c1,
        "domain_measure": spec.measure,
        "sufficient_condition": lemma.as_dict(),
        "hs_membership": members,
    }
    run.output_dir.mkdir(parents=True, exist_ok=True)
    result = _gain_outputs(run, plant, cl, rep, gain, checklist, {"hardy": hardy_info})
    # the sufficient condition is advisory, so it does not gate the exit code
    gate = ("residual_tol", "symmetric", "psd", "coercivity_certificate", "hardy_residual", "gain_pass")
    code = EXIT_OK if all(checklist.get(k, True) for k in gate) else EXIT_FAIL
    write_report(run, "PASS" if code == EXIT_OK else "FAIL", code, checklist, result)
    return code


def _study_lambda(run, st):
    """One row per lambda: the fixed point ``P_lambda`` of that stage alone, warm started."""
    prob = parse_problem(run)
    cfg = parse_solver(run.doc.get("solver"))
    rows = []
    p0 = None
    for lam in cfg.lambda_schedule:
        one = solve_coercive(prob, replace(cfg, lambda_schedule=(lam,)), P0=p0, strict=False)
        p0 = one.P
        row = one.history[0].as_dict()
        row["norm_P"] = float(np.linalg.norm(one.P.mat))
        rows.append(row)
    rep = solve(prob, cfg, route="coercive")
    within = [r["observed_rate"] <= r["rate_printed"] for r in rows if math.isfinite(r["observed_rate"])]
    summary = {
        "route": rep.route,
        "residual_hs": rep.residual_hs,
        "cauchy_constant": rep.extras.get("cauchy_constant"),
        "fraction_within_printed_rate": float(np.mean(within)) if within else 1.0,
        "max_stage_residual": max(r["residual"] for r in rows),
        "stages": len(rows),
    }
    return rows, summary, rep.bounds_checklist


def _study_omega(run, st):
    prob = parse_problem(run)
    rep = solve(prob, parse_solver(run.doc.get("solver")), route="noncoercive")
    rows = history_rows(rep)
    summary = {
        "residual_hs": rep.residual_hs,
        "stages": len(rows),
        "bound_hh_all": all(r.get("bound_hh_ok", True) for r in rows),
        "bound_v_all": all(r.get("bound_v_ok", True) for r in rows),
    }
    return rows, summary, rep.bounds_checklist


def _study_n(run, st):
    sizes = [int(n) for n in st.get("sizes", [2, 4, 8, 16, 32])]
    cfg = parse_solver(run.doc.get("solver"))
    rows = []
    for n in sizes:
        rng = np.random.default_rng([run.seed, n])
        prob = random_coercive_problem(rng, n)
        rep = solve(prob, cfg, route="coercive")
        nk = newton_kleinman_oracle(prob)
        rows.append(
            {
                "n": n,
                "residual": rep.residual_hs,
                "stages": len(rep.history),
                "iterations": sum(h.iterations for h in rep.history),
                "max_rate_over_printed": max(h.observed_rate / h.rate_printed for h in rep.history),
                "norm_ratio_sup": rep.extras["norm_ratio_sup"],
                "norm_bound_const": rep.extras["norm_bound_const"],
                "oracle_gap_hh": float(np.linalg.norm(nk.mat - rep.P.mat)),
            }
        )
    checklist = {"residuals": all(r["residual"] <= cfg.residual_tol for r in rows)}
    return rows, {"sizes": sizes}, checklist


def _study_coercive_suite(run, st):
    count = int(st.get("count", 100))
    n_max = int(st.get("n_max", 32))
    cfg = parse_solver(run.doc.get("solver"))
    rng = np.random.default_rng(run.seed)
    rows = []
    residuals = []
    for i in range(count):
        prob = random_coercive_problem(rng, int(rng.integers(1, n_max + 1)))
        rep = solve(prob, cfg, route="coercive")
        residuals.append(rep.residual_hs)
        for h in rep.history:
            row = {"instance": i, "n": prob.n}
            row.update(h.as_dict())
            rows.append(row)
    rated = [r for r in rows if math.isfinite(r["observed_rate"])]
    within = float(np.mean([r["observed_rate"] <= r["rate_printed"] for r in rated])) if rated else 1.0
    summary = {"instances": count, "fraction_within_printed_rate": within, "max_residual": max(residuals)}
    return rows, summary, {"within_printed_rate": within == 1.0, "residuals": max(residuals) <= cfg.residual_tol}


def _study_hardy(run, st):
    base = dict(run.doc.get("hardy", DEFAULT_HARDY))
    lams = [float(v) for v in st.get("lambdas", [0.0, 0.05, 0.1, 0.15, 0.2])]
    solver_doc = {"residual_tol": 1e-12}
    solver_doc.update(run.doc.get("solver") or {})
    cfg = parse_solver(solver_doc)
    rows = []
    for lam in lams:
        spec = parse_hardy({**base, "lambda_hardy": lam}, run.modes)
        plant = build_hardy_plant(spec)
        cl, rep = synthesize(plant, cfg)
        rows.append(
            {
                "lambda_hardy": lam,
                "omega": plant.omega_hardy,
                "certificate_min_eig": plant.certificate_min_eig,
                "residual": rep.residual_hs,
                "norm_P": float(np.linalg.norm(rep.P.mat)),
                "alpha": cl.alpha,
                "route": rep.route,
            }
        )
    om = [r["omega"] for r in rows]
    nrm = [r["norm_P"] for r in rows]
    summary = {
        "omega_monotone_decreasing": all(b <= a for a, b in zip(om, om[1:])),
        "norm_P_monotone_increasing": all(b >= a for a, b in zip(nrm, nrm[1:])),
    }
    checklist = {"residuals": all(r["residual"] <= HARDY_RESIDUAL_TOL for r in rows), **summary}
    return rows, summary, checklist


STUDIES = {
    "lambda": _study_lambda,
    "omega": _study_omega,
    "n": _study_n,
    "coercive_suite": _study_coercive_suite,
    "hardy": _study_hardy,
}


def cmd_study(run: RunConfig) -> int:
    st = run.doc.get("study")
    if not isinstance(st, dict) or st.get("kind") not in STUDIES:
        raise ConfigError(f"'study.kind' must be one of {sorted(STUDIES)}")
    rows, summary, checklist = STUDIES[st["kind"]](run, st)
    write_table(run, "history.csv", rows, checklist)
    write_report(run, "ok", EXIT_OK, checklist, {"kind": st["kind"], "summary": summary, "rows": len(rows)})
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "synthesize": cmd_synthesize,
    "verify": cmd_verify,
    "hardy-demo": cmd_hardy_demo,
    "study": cmd_study,
}


# ---------------------------------------------------------------- entry point


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from exc
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("modes must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hsriccati", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, required=name != "hardy-demo", help="JSON run configuration")
        sp.add_argument("--seed", type=_u64, default=None, help="64-bit seed (overrides the config)")
        sp.add_argument("--out", type=Path, default=Path("results"), help="output directory")
        sp.add_argument("--modes", type=_positive, default=None, help="truncation for Hardy plants")
    return ap


def load_run(args) -> RunConfig:
    doc = {}
    if args.config is not None:
        try:
            doc = json.loads(Path(args.config).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
    seed = args.seed if args.seed is not None else doc.get("seed", 0)
    try:
        seed = _u64(str(seed))
    except argparse.ArgumentTypeError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(args.command, doc, seed, Path(args.out), args.modes)


def _fail(run, args, code, exc, status):
    record = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConvergenceError):
        record["last_residual"] = exc.last_residual
    if isinstance(exc, UnstableClosedLoop):
        record["spectrum_real"] = np.real(exc.spectrum)
        record["spectrum_imag"] = np.imag(exc.spectrum)
    if run is None:
        run = RunConfig(args.command, {}, 0, Path(args.out), args.modes)
    write_report(run, status, code, {}, {"error": record})
    print(f"{status}: {record['type']}: {record['message']}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    run = None
    try:
        run = load_run(args)
        code = COMMANDS[args.command](run)
    except HypothesesNotMet as exc:
        return _fail(run, args, EXIT_SOLVER, exc, "hypotheses not met")
    except UnstableClosedLoop as exc:
        return _fail(run, args, EXIT_UNSTABLE, exc, "unstable closed loop")
    except SOLVER_ERRORS as exc:
        return _fail(run, args, EXIT_SOLVER, exc, "solver failure")
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        # includes PreconditionError and DimensionError raised while building inputs
        return _fail(run, args, EXIT_CONFIG, exc, "config error")
    except HsRiccatiError as exc:
        return _fail(run, args, EXIT_SOLVER, exc, "solver failure")
    print(f"{args.command}: exit {code} -> {run.output_dir}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
