"""Scenario configs and the task pipelines behind the CLI and the service.

A scenario is a single structured document (JSON or YAML) naming a kernel,
a potential, a grid and a task.  Unknown keys are hard errors.  Reports are
deterministic given the seed; the determinism hash covers everything except
timings.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .certify import (dual_family, gap_perturbation_certificate, gaussian_family,
                      gram_certificate, search_scaled_certificate)
from .errors import ConfigError, ConvergenceError
from .grids import AnnulusSpec, Grid, annulus_average_potential, ell_hat
from .intervals import IntervalUnion
from .model import (BUILTIN_KERNELS, BUILTIN_POTENTIALS, Kernel, Potential,
                    essential_range, spectral_constants, sum_potential)
from .operators import assemble
from .spectra import (DISCRETE, classify_eigenpair, eigs_above, eigs_in_window,
                      essential_spectrum, spectral_gaps, weyl_residuals)
from .tabio import read_samples
from .model import tabulated_kernel

TASKS = ("essential", "eigs", "weyl", "certify_t2", "certify_heavy",
         "certify_t5", "gap", "sweep")

_KERNEL_PARAMS = {
    "gaussian": set(), "cauchy": set(), "exponential": set(),
    "uniform": set(), "zero": set(),
}
_POTENTIAL_PARAMS = {
    "zero": set(),
    "power_tail": {"gamma", "amplitude"},
    "cubic_peak": {"amplitude"},
    "gaussian_bump": {"amplitude", "width"},
    "box": {"depth", "half_width", "center"},
}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def load_config(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith((".yaml", ".yml")):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ConfigError("scenario config must be a mapping")
    return data


def kernel_from_spec(spec: dict) -> Kernel:
    _check_keys(spec, {"builtin", "tabulated", "dim", "params"}, "kernel")
    dim = int(spec.get("dim", 1))
    if "tabulated" in spec:
        return tabulated_kernel(read_samples(spec["tabulated"]))
    name = spec.get("builtin")
    if name not in BUILTIN_KERNELS:
        raise ConfigError(f"unknown builtin kernel {name!r}; "
                          f"have {sorted(BUILTIN_KERNELS)}")
    params = dict(spec.get("params", {}))
    _check_keys(params, _KERNEL_PARAMS[name], f"kernel params for {name!r}")
    return BUILTIN_KERNELS[name](dim=dim, **params)


def potential_from_spec(spec: dict) -> Potential:
    _check_keys(spec, {"builtin", "sum", "dim", "params"}, "potential")
    dim = int(spec.get("dim", 1))
    if "sum" in spec:
        parts = spec["sum"]
        _check_keys(parts, {"v0", "v1"}, "potential sum")
        return sum_potential(potential_from_spec({**parts["v0"], "dim": dim}),
                             potential_from_spec({**parts["v1"], "dim": dim}))
    name = spec.get("builtin")
    if name not in BUILTIN_POTENTIALS:
        raise ConfigError(f"unknown builtin potential {name!r}; "
                          f"have {sorted(BUILTIN_POTENTIALS)}")
    params = dict(spec.get("params", {}))
    _check_keys(params, _POTENTIAL_PARAMS[name], f"potential params for {name!r}")
    return BUILTIN_POTENTIALS[name](dim=dim, **params)


def grid_from_spec(spec: dict) -> Grid:
    _check_keys(spec, {"dim", "half_width", "n"}, "grid")
    try:
        return Grid(dim=int(spec.get("dim", 1)),
                    half_width=float(spec["half_width"]), n=int(spec["n"]))
    except KeyError as exc:
        raise ConfigError(f"grid spec missing {exc}") from None
    except Exception as exc:
        raise ConfigError(f"bad grid spec: {exc}") from None


def validate_scenario(config: dict) -> dict:
    _check_keys(config, {"name", "kernel", "potential", "grid", "task",
                         "params", "seed"}, "scenario")
    for key in ("name", "kernel", "potential", "grid", "task"):
        if key not in config:
            raise ConfigError(f"scenario is missing the {key!r} key")
    if config["task"] not in TASKS:
        raise ConfigError(f"unknown task {config['task']!r}; have {TASKS}")
    return config


# ---------------------------------------------------------------------------
# task pipelines


def run_scenario(config: dict) -> dict:
    config = validate_scenario(config)
    kernel = kernel_from_spec(config["kernel"])
    potential = potential_from_spec(config["potential"])
    grid = grid_from_spec(config["grid"])
    task = config["task"]
    params = dict(config.get("params", {}))
    seed = int(config.get("seed", 7))

    started = time.perf_counter()
    if task == "essential":
        results = _task_essential(kernel, potential, params)
    elif task == "eigs":
        results = _task_eigs(kernel, potential, grid, params, seed)
    elif task == "weyl":
        results = _task_weyl(kernel, potential, grid, params)
    elif task == "certify_t2":
        results = _task_certify_t2(kernel, potential, grid, params)
    elif task == "certify_heavy":
        results = _task_certify_heavy(kernel, potential, grid, params)
    elif task == "certify_t5":
        results = _task_certify_t5(kernel, potential, grid, params)
    elif task == "gap":
        results = _task_gap(kernel, potential, config["potential"], grid, params,
                            seed)
    elif task == "sweep":
        results = run_sweep_results(config)
    elapsed = time.perf_counter() - started

    consts = spectral_constants(kernel, potential)
    report = {
        "scenario": config,
        "tool_version": __version__,
        "constants": consts.to_json(),
        "results": results,
        "timings": {"seconds": elapsed},
    }
    report["determinism_hash"] = determinism_hash(report)
    return report


def determinism_hash(report: dict) -> str:
    """sha256 of the canonical report, excluding timings."""
    stripped = {k: v for k, v in report.items()
                if k not in ("timings", "determinism_hash")}
    blob = json.dumps(stripped, sort_keys=True, default=_json_default)
    return hashlib.sha256(blob.encode()).hexdigest()


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _task_essential(kernel, potential, params):
    allowed = {"bins", "histogram", "merge_tol"}
    _check_keys(params, allowed, "essential params")
    bins = int(params.get("bins", 256))
    consts = spectral_constants(kernel, potential)
    ess = essential_spectrum(kernel, potential, use_analytic_range=True,
                             bins=bins, merge_tol=float(params.get("merge_tol", 0.0)))
    bounds = (consts.a_min + consts.v_min, consts.a_max + consts.v_max)
    out = {
        "essential_spectrum": ess.to_json(),
        "gaps": [list(g) for g in spectral_gaps(ess, bounds)],
        "global_bounds": list(bounds),
    }
    if params.get("histogram", False):
        hist = essential_spectrum(kernel, potential, use_analytic_range=False,
                                  bins=bins)
        out["essential_spectrum_histogram"] = hist.to_json()
    return out


def _operator(kernel, potential, grid):
    return assemble(kernel, potential, grid)


def _task_eigs(kernel, potential, grid, params, seed):
    allowed = {"mode", "threshold", "window", "k", "tol", "max_iter", "classify"}
    _check_keys(params, allowed, "eigs params")
    op = _operator(kernel, potential, grid)
    k = int(params.get("k", 4))
    tol = float(params.get("tol", 1e-8))
    max_iter = int(params.get("max_iter", 600))
    mode = params.get("mode", "above")
    if mode == "above":
        threshold = float(params.get("threshold", op.constants.mu1 + 1e-9))
        pairs = eigs_above(op, threshold, k=k, tol=tol, max_iter=max_iter,
                           seed=seed)
    elif mode == "window":
        window = params.get("window")
        if not window or len(window) != 2:
            raise ConfigError("eigs window mode needs params.window = [lo, hi]")
        pairs = eigs_in_window(op, (float(window[0]), float(window[1])), k=k,
                               tol=tol, max_iter=max_iter, seed=seed)
    else:
        raise ConfigError(f"unknown eigs mode {mode!r}")
    ess = essential_spectrum(kernel, potential)
    if params.get("classify", True):
        wide = Grid(grid.dim, 2.0 * grid.half_width, 2 * grid.n)
        factory = lambda: _operator(kernel, potential, wide)  # noqa: E731
        pairs = [classify_eigenpair(p, ess, factory) for p in pairs]
    return {
        "mode": mode,
        "eigenvalues": [p.to_json() for p in pairs],
        "essential_spectrum": ess.to_json(),
        "solver": {"method": "lanczos_full_reorth", "seed": seed, "tol": tol,
                   "max_iter": max_iter},
    }


def _task_weyl(kernel, potential, grid, params):
    allowed = {"mode", "lambda", "n_list", "delta_exponent"}
    _check_keys(params, allowed, "weyl params")
    mode = params.get("mode", "symbol_point")
    n_list = [int(n) for n in params.get("n_list", [4, 16, 64])]
    if "lambda" in params:
        lam = float(params["lambda"])
    elif mode == "symbol_point":
        lam = spectral_constants(kernel, potential).a_max
    else:
        pt = np.asarray(potential.lebesgue_point, dtype=float)
        lam = float(potential.evaluate(pt[None, :])[0])
    report = weyl_residuals(kernel, potential, lam, mode, n_list, grid,
                            delta_exponent=float(params.get("delta_exponent", 1.5)))
    return {"weyl": report.to_json()}


def _task_certify_t2(kernel, potential, grid, params):
    allowed = {"count", "m_values", "r0", "shift", "modulation"}
    _check_keys(params, allowed, "certify_t2 params")
    op = _operator(kernel, potential, grid)
    shift = float(params.get("shift", op.constants.mu1))
    count = int(params.get("count", 3))
    m_values = tuple(int(m) for m in params.get("m_values", (3, 4, 5)))
    cert, trace = search_scaled_certificate(
        op, count, shift, r0_start=params.get("r0"), m_values=m_values,
        modulation=params.get("modulation"), theorem="T2")
    out = {"search_trace": trace}
    if cert is not None:
        out["certificate"] = cert.to_json()
        out["passed"] = cert.passed
    else:
        out["passed"] = False
    return out


def _task_certify_heavy(kernel, potential, grid, params):
    allowed = {"count", "r1", "ladder", "ratio_radii", "shift"}
    _check_keys(params, allowed, "certify_heavy params")
    op = _operator(kernel, potential, grid)
    shift = float(params.get("shift", op.constants.mu1))
    count = int(params.get("count", 2))
    family = gaussian_family(grid, float(params.get("r1", 4.0)), count,
                             ladder=params.get("ladder"))
    cert = gram_certificate(op, family, shift, theorem="heavy_tail")
    ratio_radii = [float(r) for r in params.get("ratio_radii", (4, 16, 64, 256))]
    ratios = []
    for r in ratio_radii:
        ell = ell_hat(kernel, 1.0 / r)
        avg, _ = annulus_average_potential(potential, AnnulusSpec(r))
        ratios.append({"R": r, "ell_hat": ell, "avg_V": avg,
                       "ratio": ell / avg if avg > 0 else math.inf})
    monotone = all(b["ratio"] < a["ratio"] for a, b in zip(ratios, ratios[1:]))
    return {"certificate": cert.to_json(), "passed": cert.passed,
            "ratio_diagnostic": ratios, "ratio_decreasing": monotone}


def _task_certify_t5(kernel, potential, grid, params):
    allowed = {"count", "q", "scale_base", "r0", "shift"}
    _check_keys(params, allowed, "certify_t5 params")
    op = _operator(kernel, potential, grid)
    shift = float(params.get("shift", op.constants.v_max))
    family = dual_family(grid, float(params.get("q", 1.0)),
                         int(params.get("count", 2)),
                         int(params.get("scale_base", 3)),
                         r0=float(params.get("r0", 1.0)))
    cert = gram_certificate(op, family, shift, theorem="T5_dual")
    return {"certificate": cert.to_json(), "passed": cert.passed}


def _task_gap(kernel, potential, potential_spec, grid, params, seed):
    allowed = {"threshold", "k", "tol"}
    _check_keys(params, allowed, "gap params")
    if "sum" not in potential_spec:
        raise ConfigError("the gap task needs a sum potential {v0, v1}")
    dim = int(potential_spec.get("dim", 1))
    v0 = potential_from_spec({**potential_spec["sum"]["v0"], "dim": dim})
    v1 = potential_from_spec({**potential_spec["sum"]["v1"], "dim": dim})
    cert = gap_perturbation_certificate(
        kernel, v0, v1, grid,
        threshold=params.get("threshold"),
        k=int(params.get("k", 6)), tol=float(params.get("tol", 1e-8)), seed=seed)
    return {"gap_certificate": cert.to_json(), "passed": cert.passed}


# ---------------------------------------------------------------------------
# sweeps


def default_threads() -> int:
    env = os.environ.get("CONVSPEC_THREADS")
    return max(1, int(env)) if env else 1


def run_sweep_results(config: dict, threads: int | None = None) -> dict:
    params = dict(config.get("params", {}))
    allowed = {"half_widths", "spacing", "base_task", "base_params", "threshold"}
    _check_keys(params, allowed, "sweep params")
    half_widths = [float(w) for w in params.get("half_widths", [])]
    if not half_widths:
        raise ConfigError("sweep needs a nonempty params.half_widths ladder")
    spacing = float(params.get("spacing", 0.3125))
    base_task = params.get("base_task", "eigs")
    base_params = dict(params.get("base_params", {}))
    threads = threads if threads is not None else default_threads()

    def one(width):
        n = 1 << max(3, math.ceil(math.log2(2.0 * width / spacing)))
        point = {
            "name": f"{config['name']}@L={width:g}",
            "kernel": config["kernel"], "potential": config["potential"],
            "grid": {"dim": config["grid"].get("dim", 1), "half_width": width,
                     "n": n},
            "task": base_task, "params": base_params,
            "seed": config.get("seed", 7),
        }
        try:
            rep = run_scenario(point)
            return {"half_width": width, "n": n, "status": "ok",
                    "results": rep["results"]}
        except Exception as exc:  # individual failures do not stop the sweep
            return {"half_width": width, "n": n, "status": "error",
                    "error": str(exc)}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(one, half_widths))
    else:
        points = [one(w) for w in half_widths]

    rows = []
    for pt in points:
        row = {"half_width": pt["half_width"], "n": pt["n"],
               "status": pt["status"]}
        res = pt.get("results", {})
        if "eigenvalues" in res:
            eigs = res["eigenvalues"]
            discrete = [e for e in eigs if e["classification"] == DISCRETE]
            row["eigencount"] = len(discrete) if any(
                e["classification"] != "unresolved" for e in eigs) else len(eigs)
            row["discrete_count"] = len(discrete)
            row["extremal"] = max((e["value"] for e in eigs), default=None)
        if "passed" in res:
            row["certificate_passed"] = res["passed"]
        rows.append(row)
    counts = [r.get("discrete_count") for r in rows
              if r["status"] == "ok" and "discrete_count" in r]
    verdict = all(b >= a for a, b in zip(counts, counts[1:])) if counts else None
    partial = any(r["status"] != "ok" for r in rows)
    return {"points": rows, "count_nondecreasing": verdict, "partial": partial}


# ---------------------------------------------------------------------------
# emission


def emit_report(report: dict, out_dir, formats=("json",)) -> list[str]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = report["scenario"].get("name", "report")
    written = []
    for fmt in formats:
        if fmt == "json":
            path = out_dir / f"{name}.json"
            path.write_text(json.dumps(report, indent=2, sort_keys=True,
                                       default=_json_default) + "\n")
        elif fmt == "csv":
            path = out_dir / f"{name}.csv"
            path.write_text(_flat_csv(report))
        elif fmt == "plotdata":
            path = out_dir / f"{name}.plot.csv"
            path.write_text(_plot_series(report))
        else:
            raise ConfigError(f"unknown report format {fmt!r}")
        written.append(str(path))
    return written


def _flat_csv(report: dict) -> str:
    res = report["results"]
    lines = []
    if "eigenvalues" in res:
        lines.append("lambda,residual,boundary_mass,classification")
        for e in res["eigenvalues"]:
            lines.append(f"{e['value']!r},{e['residual']!r},"
                         f"{e['boundary_mass']!r},{e['classification']}")
    elif "weyl" in res:
        lines.append("n,residual,convolution_term,potential_term")
        for e in res["weyl"]["entries"]:
            lines.append(f"{e['n']},{e['residual']!r},"
                         f"{e['convolution_term']!r},{e['potential_term']!r}")
    elif "points" in res:
        lines.append("half_width,n,status,discrete_count,extremal,certificate_passed")
        for p in res["points"]:
            lines.append(",".join(str(p.get(k, "")) for k in
                                  ("half_width", "n", "status", "discrete_count",
                                   "extremal", "certificate_passed")))
    elif "certificate" in res or "gap_certificate" in res:
        cert = res.get("certificate") or res.get("gap_certificate")
        lines.append("key,value")
        for key in ("passed", "min_eig", "certified_count", "shift", "lambda0",
                    "delta", "margin", "theta_minus"):
            if key in cert:
                lines.append(f"{key},{cert[key]!r}")
    else:
        lines.append("key,value")
        for key, val in res.items():
            lines.append(f"{key},{json.dumps(val, default=_json_default)!r}")
    return "\n".join(lines) + "\n"


def _plot_series(report: dict) -> str:
    res = report["results"]
    lines = []
    if "weyl" in res:
        lines.append("n,residual")
        for e in res["weyl"]["entries"]:
            lines.append(f"{e['n']},{e['residual']!r}")
    elif "ratio_diagnostic" in res:
        lines.append("R,ratio")
        for row in res["ratio_diagnostic"]:
            lines.append(f"{row['R']!r},{row['ratio']!r}")
    elif "points" in res:
        lines.append("half_width,discrete_count")
        for p in res["points"]:
            lines.append(f"{p['half_width']!r},{p.get('discrete_count', '')}")
    elif "eigenvalues" in res:
        lines.append("index,lambda")
        for i, e in enumerate(res["eigenvalues"]):
            lines.append(f"{i},{e['value']!r}")
    else:
        lines.append("index,value")
    return "\n".join(lines) + "\n"
