"""Command-line experiment runner.

    strfm run <config.toml | preset> [-o DIR]
    strfm list-presets
    strfm dump-preset <name>

Exit status is 0 on success, 1 when a solve fails and 2 for configuration
errors; failures print a JSON object naming the problem on stderr. The
number of BLAS threads is taken from ``STRFM_NUM_THREADS`` when set.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import analysis
from .config import ConfigError, RunConfig, get_preset, list_presets, load, preset_names
from .geometry import eval_grid
from .problems import ProblemSpec, get_problem
from .solve import Solution, SolveError, discretize, solve_block_marching, solve_strfm

THREADS_ENV = "STRFM_NUM_THREADS"
N_SNAPSHOT_TIMES = 11


class RunFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _finite(obj):
    """JSON-safe copy: NaN/inf become null, numpy scalars become Python ones."""
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    return obj


def summary_schema() -> dict:
    text = resources.files("strfm").joinpath("schemas/summary.schema.json").read_text()
    return json.loads(text)


def validate_summary(summary: dict) -> None:
    import jsonschema

    jsonschema.validate(summary, summary_schema())


def resolve_problem(cfg: RunConfig) -> ProblemSpec:
    if isinstance(cfg.problem, dict):
        from .custom import problem_from_dict

        return problem_from_dict(cfg.problem)
    if cfg.domain is not None:
        from .geometry import composite_from_dict
        from .problems import make_membrane_2d

        if cfg.problem != "membrane_complex":
            raise ConfigError("domain", "a [domain] table only applies to problem 'membrane_complex'")
        try:
            return make_membrane_2d(False, domain=composite_from_dict(cfg.domain))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("domain", str(exc)) from None
    return get_problem(cfg.problem)


def load_target(target: str) -> RunConfig:
    """A config file path or a preset name."""
    if target in preset_names():
        return get_preset(target)
    path = Path(target)
    if not path.exists():
        raise ConfigError("config", f"no such file or preset: {target!r}")
    return load(path)


def _segments(T: float, n: int) -> list:
    return [float(v) for v in np.linspace(0.0, T, n + 1)]


def _error(problem, sol, cfg, reference=None, n_seg: int = 1) -> analysis.ErrorReport:
    return analysis.error_report(problem, sol, reference, cfg.eval.space_counts(problem.d_x),
                                 cfg.eval.n_time, _segments(problem.T, n_seg))


def write_snapshot(path, problem: ProblemSpec, sol, cfg: RunConfig) -> None:
    """Gridded values at a few times: columns ``x[, y], t, u_k[, exact_k]``."""
    X, _ = eval_grid(problem.domain, cfg.eval.space_counts(problem.d_x))
    X = X[problem.domain.in_closure(X)]
    names = ["x", "y", "z"][:problem.d_x]
    header = names + ["t"] + [f"u_{k}" for k in range(problem.d_u)]
    if problem.exact is not None:
        header += [f"exact_{k}" for k in range(problem.d_u)]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for t in np.linspace(0.0, problem.T, N_SNAPSHOT_TIMES):
            T = np.full(len(X), t)
            cols = [X, T[:, None], sol(X, T)]
            if problem.exact is not None:
                cols.append(problem.exact_values(X, T))
            np.savetxt(fh, np.hstack(cols), delimiter=",", fmt="%.17g")


def _config_key(cfg: RunConfig) -> str:
    d = cfg.to_dict()
    for k in ("output_dir", "name", "section", "mode", "sweep", "eigen", "eval"):
        d.pop(k, None)
    return hashlib.sha256(json.dumps(d, sort_keys=True, default=str).encode()).hexdigest()


def reference_solution(problem: ProblemSpec, cfg: RunConfig, out: Path) -> tuple:
    """Solve (or reload from ``out/reference.npz``) the high-resolution reference run."""
    ref_cfg = cfg.replace(**cfg.reference.overrides).replace(mode="strfm", N_b=1)
    key = _config_key(ref_cfg)
    path = out / "reference.npz"
    if path.exists():
        with np.load(path) as data:
            if str(data["key"]) == key:
                disc = discretize(problem, ref_cfg)
                sol = Solution(problem, disc.decomp, disc.bank, disc.pou, data["coefficients"].copy())
                return sol, ref_cfg, {"reused": True, "key": key}
    res = solve_strfm(problem, ref_cfg)
    np.savez(path, coefficients=res.report.coefficients, key=np.array(key))
    return res.solution, ref_cfg, {"reused": False, "key": key, "solve": res.report.summary()}


# ---------------------------------------------------------------------------
# modes
# ---------------------------------------------------------------------------


def _run_strfm(problem, cfg, out, summary):
    res = solve_strfm(problem, cfg)
    summary["solve"] = res.report.summary()
    if problem.exact is not None:
        err = _error(problem, res.solution, cfg, n_seg=cfg.N_t)
        summary["error"] = err.summary()
        analysis.write_segments_csv(out / "segments.csv", err)
    write_snapshot(out / "snapshot.csv", problem, res.solution, cfg)


def _march_summary(rep) -> dict:
    return {"n_blocks": rep.n_blocks, "wall_time": rep.wall_time,
            "blocks": [r.summary() for r in rep.blocks]}


def _run_march(problem, cfg, out, summary):
    rep = solve_block_marching(problem, cfg)
    summary["march"] = _march_summary(rep)
    if problem.exact is not None:
        err = _error(problem, rep.solution, cfg, n_seg=cfg.N_b)
        summary["error"] = err.summary()
        analysis.write_segments_csv(out / "segments.csv", err)
    write_snapshot(out / "snapshot.csv", problem, rep.solution, cfg)


def _run_compare(problem, cfg, out, summary):
    if problem.exact is None:
        raise ConfigError("problem", "mode 'compare' needs a problem with an exact solution")
    nb = max(cfg.N_b, cfg.N_t)
    glob = solve_strfm(problem, cfg.replace(N_t=nb, N_b=1))
    mar = solve_block_marching(problem, cfg.replace(N_t=1, N_b=nb))
    e_s = _error(problem, glob.solution, cfg, n_seg=nb)
    e_m = _error(problem, mar.solution, cfg, n_seg=nb)
    analysis.write_segments_csv(out / "segments_strfm.csv", e_s)
    analysis.write_segments_csv(out / "segments_march.csv", e_m)
    summary["solve"] = glob.report.summary()
    summary["march"] = _march_summary(mar)
    summary["error"] = e_s.summary()
    summary["error_march"] = e_m.summary()
    growth = {"n_segments": nb, "strfm_flatness": analysis.flatness_ratio(e_s.segment_L2)}
    if nb >= 3:
        rate, r2 = analysis.growth_fit(e_m.segment_L2)
        growth.update(march_rate=rate, march_r2=r2)
        B = analysis.propagation_matrices(problem, cfg.replace(N_t=1, N_b=1), 3,
                                          block_width=problem.T / nb)[1]
        eig = analysis.eigen_report(B, complex_form=problem.complex_form)
        growth.update(lambda_m=eig.max_modulus, sqrt_lambda_m=eig.growth_factor)
    summary["growth"] = growth
    write_snapshot(out / "snapshot.csv", problem, glob.solution, cfg)


def _sweep_rows(problem, cfg, reference=None):
    sw = cfg.sweep
    return analysis.convergence_sweep(problem, cfg, sw.axis, sw.values, sw.solver, reference)


def _rows_summary(rows) -> list:
    return [dataclasses.asdict(r) for r in rows]


def _run_sweep(problem, cfg, out, summary):
    if problem.exact is None:
        raise ConfigError("problem", "mode 'sweep' needs an exact solution (use mode 'reference')")
    rows = _sweep_rows(problem, cfg)
    analysis.write_sweep_csv(out / "sweep.csv", rows)
    summary["sweep"] = {"axis": cfg.sweep.axis, "solver": cfg.sweep.solver, "rows": _rows_summary(rows)}


def _run_eigen(problem, cfg, out, summary):
    entries = []
    for J in cfg.eigen.J_values:
        c = cfg.replace(J_n=int(J))
        Bs = analysis.propagation_matrices(problem, c, cfg.eigen.n_blocks, cfg.eigen.method,
                                           block_width=problem.T / max(cfg.N_b, cfg.eigen.n_blocks))
        rep = analysis.eigen_report(Bs[0], complex_form=problem.complex_form)
        analysis.write_eigen_csv(out / f"eigen_J{int(J)}.csv", rep.eigenvalues)
        entry = {"J_n": int(J), **rep.summary()}
        if len(Bs) > 1:
            entry["B_agreement"] = float(np.abs(Bs[1] - Bs[0]).max() / max(np.abs(Bs[0]).max(), 1e-300))
        entries.append(entry)
    summary["eigen"] = entries


def _run_reference(problem, cfg, out, summary):
    ref, ref_cfg, info = reference_solution(problem, cfg, out)
    summary["reference"] = {"overrides": dict(cfg.reference.overrides), **info}
    if cfg.sweep is not None:
        rows = _sweep_rows(problem, cfg, ref)
        analysis.write_sweep_csv(out / "sweep.csv", rows)
        summary["sweep"] = {"axis": cfg.sweep.axis, "solver": cfg.sweep.solver,
                            "rows": _rows_summary(rows)}
    else:
        res = solve_strfm(problem, cfg.replace(N_b=1))
        summary["solve"] = res.report.summary()
        summary["error"] = _error(problem, res.solution, cfg, ref).summary()
    write_snapshot(out / "snapshot.csv", problem, ref, ref_cfg)


MODES = {"strfm": _run_strfm, "march": _run_march, "compare": _run_compare, "sweep": _run_sweep,
         "eigen": _run_eigen, "reference": _run_reference}


def run_config(cfg: RunConfig, output_dir=None) -> dict:
    """Execute one run; returns the (validated) summary written to ``summary.json``."""
    cfg.validate()
    problem = resolve_problem(cfg)
    out = Path(output_dir if output_dir is not None else Path(cfg.output_dir) / cfg.name)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"schema_version": 1, "status": "ok", "name": cfg.name, "mode": cfg.mode,
               "problem": problem.name, "section": cfg.section, "config": cfg.to_dict()}
    t0 = time.perf_counter()
    MODES[cfg.mode](problem, cfg, out, summary)
    summary["wall_time"] = time.perf_counter() - t0
    summary = _finite(summary)
    validate_summary(summary)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _fail(kind: str, code: int, message: str, field=None) -> int:
    err = {"status": "error", "kind": kind, "message": message}
    if field is not None:
        err["field"] = field
    print(json.dumps(err), file=sys.stderr)
    return code


def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(THREADS_ENV, f"must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(THREADS_ENV, f"must be a positive integer, got {raw!r}")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="strfm", description="Space-time random feature experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a config file or a preset")
    r.add_argument("target", help="path to a TOML config, or a preset name")
    r.add_argument("-o", "--output-dir", help="directory for summary.json and CSV output")
    sub.add_parser("list-presets", help="print the preset catalog")
    d = sub.add_parser("dump-preset", help="print a preset as a TOML config")
    d.add_argument("name")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-presets":
        print(list_presets())
        return 0
    try:
        if args.command == "dump-preset":
            print(get_preset(args.name).dumps(), end="")
            return 0
        limit = _thread_limit()
        cfg = load_target(args.target)
        try:
            summary = run_config(cfg, args.output_dir)
        finally:
            if limit is not None:
                limit.unregister()
    except ConfigError as exc:
        return _fail("config", 2, exc.message, exc.field)
    except (SolveError, np.linalg.LinAlgError, ValueError, RuntimeError, MemoryError) as exc:
        return _fail("solve", 1, f"{type(exc).__name__}: {exc}")
    print(json.dumps({"status": "ok", "name": summary["name"], "mode": summary["mode"],
                      "output_dir": str(args.output_dir or Path(cfg.output_dir) / cfg.name)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
