"""Experiment orchestration: validated TOML configs in, deterministic CSV /
JSON artifacts and figures out, with a checksum manifest per run.

Reruns with an identical config produce byte-identical delimited output; SVG
files are reproducible too unless a timestamp is requested.  Sweeps write one
row per (grid point, seed), resume by key, and aggregate per grid point.
"""
from __future__ import annotations

import hashlib
import io
import json
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Callable, Sequence

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover - environment-dependent
    import tomli as tomllib

from . import barrier as barrier_mod
from . import continuum as continuum_mod
from . import dynamics as dynamics_mod
from . import media as media_mod
from . import percolation as percolation_mod
from . import plots

EXPERIMENT_KINDS = (
    "discrete-build",
    "discrete-simulate",
    "alpha-estimate",
    "percolation",
    "continuum-build",
    "sweep",
)

CSV_SCHEMA_LINE = "# schema=1"


class ConfigError(ValueError):
    """Invalid experiment configuration; message lists the offending field."""


class RunError(RuntimeError):
    """The run produced no usable output."""


@dataclass
class ExperimentConfig:
    kind: str
    out_dir: Path
    seeds: list[int]
    params: dict = field(default_factory=dict)
    emit_svg: bool = False
    svg_timestamp: bool = False
    jobs: int = 1
    sub_kind: str | None = None
    grid: dict = field(default_factory=dict)


def _require(cond: bool, field_name: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{field_name}: {message}")


def _parse_seeds(raw) -> list[int]:
    if isinstance(raw, list):
        seeds = raw
    elif isinstance(raw, dict):
        base = raw.get("base", 0)
        count = raw.get("count")
        _require(isinstance(base, int), "seeds.base", "must be an integer")
        _require(isinstance(count, int) and count >= 1, "seeds.count", "must be an integer >= 1")
        seeds = list(range(base, base + count))
    else:
        raise ConfigError("seeds: must be a list or a {base, count} table")
    _require(len(seeds) >= 1, "seeds", "must not be empty")
    _require(all(isinstance(s, int) for s in seeds), "seeds", "entries must be integers")
    _require(len(set(seeds)) == len(seeds), "seeds", "entries must be distinct")
    return seeds


def _distribution_from_params(params: dict, field_name: str = "params") -> media_mod.DistributionSpec:
    if "distribution" in params:
        try:
            return media_mod.DistributionSpec.from_config(
                params["distribution"], upper_bound=params.get("upper_bound")
            )
        except media_mod.DistributionSpecError as exc:
            raise ConfigError(f"{field_name}.distribution: {exc}") from exc
    if "p" in params:
        try:
            p = Fraction(str(params["p"]))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{field_name}.p: not a valid probability") from exc
        _require(0 <= p <= 1, f"{field_name}.p", "must lie in [0, 1]")
        return media_mod.DistributionSpec.bernoulli(p)
    raise ConfigError(f"{field_name}: needs 'distribution' pairs or Bernoulli 'p'")


def _validate_params(kind: str, params: dict) -> None:
    """Check module preconditions before any run starts."""
    if kind in ("alpha-estimate", "discrete-build", "discrete-simulate"):
        _distribution_from_params(params)
    if kind == "alpha-estimate":
        samples = params.get("samples", 10_000)
        _require(isinstance(samples, int) and samples >= 1, "params.samples", "must be >= 1")
        depth = params.get("depth", 64)
        _require(isinstance(depth, int) and depth >= 1, "params.depth", "must be >= 1")
    elif kind == "discrete-build":
        _require(int(params.get("half_width", 100)) >= 1, "params.half_width", "must be >= 1")
        _require(int(params.get("N_start", 0)) >= 0, "params.N_start", "must be >= 0")
    elif kind == "discrete-simulate":
        _require(int(params.get("width", 64)) >= 2, "params.width", "must be >= 2")
        _require(float(params.get("horizon", 100.0)) > 0, "params.horizon", "must be > 0")
        spec = _distribution_from_params(params)
        if params.get("build_barrier", False):
            _require(not spec.has_minus_inf, "params.distribution",
                     "dynamics requires a law without mass at -inf")
    elif kind == "percolation":
        _require(int(params.get("width", 32)) >= 1, "params.width", "must be >= 1")
        _require(int(params.get("height", 16)) >= 1, "params.height", "must be >= 1")
        p = float(params.get("p", 0.9))
        _require(0.0 <= p <= 1.0, "params.p", "must lie in [0, 1]")
        _require(int(params.get("d", 1)) >= 1, "params.d", "must be >= 1")
    elif kind == "continuum-build":
        k = float(params.get("k", 1.0))
        _require(0.0 < k <= 1.0, "params.k", "must lie in (0, 1]")
        alpha = float(params.get("alpha", 1.6))
        _require(alpha > math.sqrt(2.0), "params.alpha", "must exceed sqrt(2)")
        _require(float(params.get("lambda_plus", 1.0)) > 0, "params.lambda_plus", "must be > 0")
        _require(float(params.get("lambda_minus", 0.01)) > 0, "params.lambda_minus", "must be > 0")
        _require(int(params.get("n_columns", 10)) >= 2, "params.n_columns", "must be >= 2")
        _require(int(params.get("height", 12)) >= 1, "params.height", "must be >= 1")


def validate_config(raw: dict, *, base_dir: Path | None = None) -> ExperimentConfig:
    kind = raw.get("kind")
    _require(kind in EXPERIMENT_KINDS, "kind", f"must be one of {EXPERIMENT_KINDS}, got {kind!r}")
    _require("seeds" in raw, "seeds", "is required")
    seeds = _parse_seeds(raw["seeds"])
    out_raw = raw.get("out", "results")
    out_dir = Path(out_raw)
    if base_dir is not None and not out_dir.is_absolute():
        out_dir = base_dir / out_dir
    params = dict(raw.get("params", {}))
    emit_svg = bool(raw.get("emit_svg", False))
    jobs = int(raw.get("jobs", 1))
    _require(jobs >= 1, "jobs", "must be >= 1")
    sub_kind = raw.get("sub_kind")
    grid = dict(raw.get("grid", {}))
    if kind == "sweep":
        _require(sub_kind in EXPERIMENT_KINDS and sub_kind != "sweep",
                 "sub_kind", "sweep needs a non-sweep sub_kind")
        _require(len(grid) >= 1, "grid", "sweep needs at least one axis")
        for axis, values in grid.items():
            _require(isinstance(values, list) and len(values) >= 1,
                     f"grid.{axis}", "must be a non-empty list")
        for point in _grid_points(grid):
            _validate_params(sub_kind, {**params, **point})
    else:
        _validate_params(kind, params)
    return ExperimentConfig(
        kind=kind,
        out_dir=out_dir,
        seeds=seeds,
        params=params,
        emit_svg=emit_svg,
        svg_timestamp=bool(raw.get("svg_timestamp", False)),
        jobs=jobs,
        sub_kind=sub_kind,
        grid=grid,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config: not valid TOML: {exc}") from exc
    return validate_config(raw, base_dir=path.parent)


# ---------------------------------------------------------------------------
# Deterministic file helpers
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))  # normalizes float subclasses (numpy scalars)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    buf = io.StringIO()
    buf.write(CSV_SCHEMA_LINE + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    lines = path.read_text(encoding="utf-8").splitlines()
    body = [ln for ln in lines if ln and not ln.startswith("#")]
    header = body[0].split(",")
    return header, [ln.split(",") for ln in body[1:]]


def write_json(path: Path, doc) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return path


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


def write_manifest(out_dir: Path, files: Sequence[Path], config_note: dict) -> Path:
    entries = []
    for f in sorted(set(files)):
        rel = f.relative_to(out_dir).as_posix()
        entries.append({"path": rel, "sha256": _sha256(f), "bytes": f.stat().st_size})
    return write_json(out_dir / "manifest.json", {"config": config_note, "files": entries})


# ---------------------------------------------------------------------------
# Per-kind tasks: one summary row per seed
# ---------------------------------------------------------------------------


def _task_alpha_estimate(params: dict, seed: int) -> dict:
    spec = _distribution_from_params(params)
    samples = int(params.get("samples", 10_000))
    depth = int(params.get("depth", 64))
    f_force = int(params.get("F", 0))
    estimate, std_error = media_mod.mean_max_mc(spec, samples, depth, seed)
    exact, exact_err = media_mod.mean_max_exact(spec, depth)
    satisfied, margin = media_mod.pinning_condition(spec, f_force, depth)
    return {
        "seed": seed,
        "estimate": estimate,
        "std_error": std_error,
        "exact": exact,
        "exact_error_bound": exact_err,
        "margin": margin,
        "pinning": satisfied,
    }


def _task_discrete_build(params: dict, seed: int) -> dict:
    spec = _distribution_from_params(params)
    fld = media_mod.SeededField(seed, spec)
    path = barrier_mod.construct_supersolution(
        fld,
        N_start=int(params.get("N_start", 0)),
        F=int(params.get("F", 0)),
        half_width=int(params.get("half_width", 100)),
    )
    stats = barrier_mod.path_stats(path)
    violations = barrier_mod.verify_discrete(path, fld, path.F)
    return {
        "seed": seed,
        "min_v": stats.min_v,
        "nonnegative": stats.nonnegative,
        "forward_slope": stats.forward_slope,
        "backward_slope": stats.backward_slope,
        "forward_drift": stats.forward_drift,
        "backward_drift": stats.backward_drift,
        "violations": len(violations),
        "_path": path,
    }


def _task_discrete_simulate(params: dict, seed: int) -> dict:
    spec = _distribution_from_params(params)
    fld = media_mod.SeededField(seed, spec)
    width = int(params.get("width", 64))
    horizon = float(params.get("horizon", 100.0))
    f_force = int(params.get("F", 0))
    observers = []
    path = None
    if params.get("build_barrier", False):
        path = barrier_mod.construct_supersolution(
            fld,
            N_start=int(params.get("N_start", 0)),
            F=f_force,
            half_width=int(params.get("half_width", width // 2)),
        )
        observers.append(dynamics_mod.ComparisonObserver(barrier_mod.barrier_on_window(path, width)))
    series_interval = params.get("series_interval")
    summary = dynamics_mod.simulate(
        fld,
        F=f_force,
        width=width,
        horizon=horizon,
        seed=seed,
        observers=observers,
        origin=-(width // 2),
        jump_budget=int(params.get("jump_budget", 5_000_000)),
        series_interval=float(series_interval) if series_interval is not None else None,
    )
    comparison = summary.observer_outputs.get("comparison")
    return {
        "seed": seed,
        "jump_count": summary.jump_count,
        "sup_height": summary.sup_height,
        "final_max": max(summary.final_state.u),
        "comparison": "ok" if comparison and comparison["ok"] else ("violated" if comparison else "n/a"),
        "budget_exhausted": summary.budget_exhausted,
        "_summary": summary,
    }


def _task_percolation(params: dict, seed: int) -> dict:
    grid = percolation_mod.generate_grid_blocked(
        int(params.get("width", 32)),
        int(params.get("height", 16)),
        float(params.get("p", 0.9)),
        int(params.get("d", 1)),
        seed,
    )
    surface = percolation_mod.minimal_open_surface(grid)
    return {
        "seed": seed,
        "found": surface is not None,
        "max_row": max(surface.phi) if surface else -1,
        "open_fraction": float(grid.open_sites.mean()),
        "_grid": grid,
        "_surface": surface,
    }


def _task_continuum_build(params: dict, seed: int) -> dict:
    scales = continuum_mod.select_scales(
        float(params.get("k", 1.0)),
        float(params.get("alpha", 1.6)),
        float(params.get("lambda_plus", 1.0)),
        float(params.get("lambda_minus", 0.01)),
    )
    result = continuum_mod.build_continuum_barrier(
        scales,
        n_columns=int(params.get("n_columns", 10)),
        seed=seed,
        height=int(params.get("height", 12)),
    )
    row = {
        "seed": seed,
        "success": result.success,
        "failure": result.failure or "",
        "segments": len(result.piecewise.segments) if result.piecewise else 0,
        "min_v": result.report.min_v if result.report else float("nan"),
        "max_residual": result.report.max_residual if result.report else float("nan"),
        "kink_violations": len(result.report.kink_violations) if result.report else -1,
        "residual_violations": len(result.report.residual_violations) if result.report else -1,
        "min_neg_clearance": result.report.min_neg_clearance if result.report else float("nan"),
        "_result": result,
    }
    return row


_TASKS: dict[str, Callable[[dict, int], dict]] = {
    "alpha-estimate": _task_alpha_estimate,
    "discrete-build": _task_discrete_build,
    "discrete-simulate": _task_discrete_simulate,
    "percolation": _task_percolation,
    "continuum-build": _task_continuum_build,
}


def run_task(kind: str, params: dict, seed: int) -> dict:
    """One (kind, params, seed) unit of work; returns the summary row
    (underscore keys carry in-memory artifacts and stay out of CSV)."""
    return _TASKS[kind](params, seed)


def _public_row(row: dict) -> dict:
    return {k: v for k, v in row.items() if not k.startswith("_")}


# ---------------------------------------------------------------------------
# run(): full experiment with artifacts
# ---------------------------------------------------------------------------


def run(config: ExperimentConfig) -> dict:
    """Execute an experiment, write artifacts, return the manifest document.

    Per-seed failures are recorded in the summary (error column) without
    aborting the remaining seeds; if every seed fails, RunError is raised.
    """
    if config.kind == "sweep":
        return sweep(config)
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []

    rows: list[dict] = []
    errors: list[str] = []
    for seed in config.seeds:
        try:
            rows.append(run_task(config.kind, config.params, seed))
        except Exception as exc:  # recorded, not fatal
            errors.append(f"seed {seed}: {exc}")
            rows.append({"seed": seed, "error": str(exc)})
    good = [r for r in rows if "error" not in r]
    if not good:
        raise RunError("all seeds failed: " + "; ".join(errors))

    header = sorted({k for r in rows for k in _public_row(r)} - {"seed", "error"})
    header = ["seed"] + header + (["error"] if errors else [])
    csv_rows = [[_public_row(r).get(k, "") for k in header] for r in rows]
    files.append(write_csv(out / "summary.csv", header, csv_rows))

    files.extend(_emit_kind_artifacts(config, good, out))

    agg = _aggregate_rows([_public_row(r) for r in good])
    files.append(write_json(out / "summary.json", {
        "kind": config.kind,
        "seeds": config.seeds,
        "params": _json_safe(config.params),
        "aggregate": agg,
        "errors": errors,
    }))
    manifest = write_manifest(out, files, {"kind": config.kind, "seeds": config.seeds})
    doc = json.loads(manifest.read_text())
    return doc


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _aggregate_rows(rows: list[dict]) -> dict:
    agg: dict[str, float] = {}
    numeric: dict[str, list[float]] = {}
    for row in rows:
        for k, v in row.items():
            if isinstance(v, bool):
                numeric.setdefault(k + "_fraction", []).append(1.0 if v else 0.0)
            elif isinstance(v, (int, float)) and math.isfinite(v):
                numeric.setdefault(k, []).append(float(v))
    for k, vals in numeric.items():
        if k == "seed":
            continue
        agg[k + "_mean"] = statistics.fmean(vals)
        if len(vals) > 1:
            agg[k + "_stdev"] = statistics.stdev(vals)
    return agg


def _emit_kind_artifacts(config: ExperimentConfig, rows: list[dict], out: Path) -> list[Path]:
    files: list[Path] = []
    kind = config.kind
    if kind == "discrete-build":
        paths_dir = out / "paths"
        paths_dir.mkdir(exist_ok=True)
        for row in rows:
            p = paths_dir / f"path_{row['seed']}.txt"
            with open(p, "w", encoding="utf-8") as fh:
                barrier_mod.write_path_text(row["_path"], fh)
            files.append(p)
        if config.emit_svg and rows:
            spec = _distribution_from_params(config.params)
            fld = media_mod.SeededField(rows[0]["seed"], spec)
            files.append(plots.discrete_path_figure(rows[0]["_path"], fld, out / "fig_path.svg"))
    elif kind == "discrete-simulate":
        runs_dir = out / "runs"
        runs_dir.mkdir(exist_ok=True)
        for row in rows:
            p = runs_dir / f"run_{row['seed']}.json"
            files.append(write_json(p, row["_summary"].to_json_dict()))
        if config.emit_svg and rows:
            files.append(plots.trajectory_figure([r["_summary"] for r in rows[:6]], out / "fig_heights.svg"))
    elif kind == "percolation":
        grids_dir = out / "grids"
        grids_dir.mkdir(exist_ok=True)
        for row in rows:
            gp = grids_dir / f"grid_{row['seed']}.rle"
            with open(gp, "w", encoding="utf-8") as fh:
                percolation_mod.write_grid_rle(row["_grid"], fh)
            sp = grids_dir / f"surface_{row['seed']}.txt"
            with open(sp, "w", encoding="utf-8") as fh:
                percolation_mod.write_surface(row["_surface"], fh)
            files.extend([gp, sp])
        if config.emit_svg and rows:
            files.append(plots.grid_figure(rows[0]["_grid"], rows[0]["_surface"], out / "fig_grid.svg"))
    elif kind == "continuum-build":
        cont_dir = out / "continuum"
        cont_dir.mkdir(exist_ok=True)
        wrote_scales = False
        for row in rows:
            result: continuum_mod.ContinuumBuildResult = row["_result"]
            if not wrote_scales:
                files.append(write_json(out / "scales.json", _scales_doc(result.scales)))
                wrote_scales = True
            op = cont_dir / f"obstacles_{row['seed']}.csv"
            with open(op, "w", encoding="utf-8") as fh:
                continuum_mod.write_obstacles_csv(result.obstacles, fh)
            files.append(op)
            if result.piecewise is not None:
                pp = cont_dir / f"piecewise_{row['seed']}.json"
                with open(pp, "w", encoding="utf-8") as fh:
                    continuum_mod.write_piecewise_json(result.piecewise, result.scales, fh)
                files.append(pp)
            if result.report is not None:
                files.append(write_json(cont_dir / f"report_{row['seed']}.json",
                                        _json_safe(result.report.to_json_dict())))
        good = [r for r in rows if r["_result"].success]
        if config.emit_svg and good:
            res = good[0]["_result"]
            files.append(plots.continuum_figure(res.piecewise, res.obstacles, out / "fig_continuum.svg"))
    elif kind == "alpha-estimate":
        if config.emit_svg and rows:
            seeds = [r["seed"] for r in rows]
            files.append(plots.estimate_figure(
                seeds,
                [r["estimate"] for r in rows],
                [r["std_error"] for r in rows],
                [r["exact"] for r in rows],
                out / "fig_estimates.svg",
            ))
    return files


def _scales_doc(scales: continuum_mod.ScaleParams) -> dict:
    return {
        "k": scales.k, "alpha": scales.alpha,
        "lambda_plus": scales.lambda_plus, "lambda_minus": scales.lambda_minus,
        "l": scales.l, "d_gap": scales.d_gap, "h": scales.h, "b": scales.b,
        "N": scales.N, "rho": scales.rho, "F_star": scales.F_star,
        "S": scales.S, "p0": scales.p0,
    }


# ---------------------------------------------------------------------------
# sweep(): parameter grid x seeds -> consolidated CSV
# ---------------------------------------------------------------------------


def _grid_points(grid: dict) -> list[dict]:
    axes = sorted(grid)
    points = []
    for combo in product(*(grid[a] for a in axes)):
        points.append(dict(zip(axes, combo)))
    return points


def _point_key(point: dict, seed: int) -> str:
    return "|".join(f"{k}={_fmt(v)}" for k, v in sorted(point.items())) + f"|seed={seed}"


def _sweep_task(args: tuple) -> tuple[str, dict]:
    sub_kind, params, point, seed = args
    row = run_task(sub_kind, {**params, **point}, seed)
    public = {**point, **_public_row(row)}
    return _point_key(point, seed), public


def sweep(config: ExperimentConfig) -> dict:
    """Cross the parameter grid with the seed list; one row per (point, seed).

    Rows already present in consolidated.csv are skipped (resume by key).
    Tasks write to per-key temp files and are merged by a single-threaded
    consolidator; the final CSV is sorted and deterministic.
    """
    assert config.sub_kind is not None
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    tmp_dir = out / "tmp"
    tmp_dir.mkdir(exist_ok=True)

    consolidated = out / "consolidated.csv"
    existing: dict[str, dict] = {}
    if consolidated.exists():
        header, raw_rows = read_csv(consolidated)
        for raw in raw_rows:
            row = dict(zip(header, raw))
            key = row.pop("key")
            existing[key] = row

    points = _grid_points(config.grid)
    todo = []
    for point in points:
        for seed in config.seeds:
            key = _point_key(point, seed)
            if key not in existing:
                todo.append((config.sub_kind, config.params, point, seed))

    produced: dict[str, dict] = {}
    errors: list[str] = []

    def record(key: str, row: dict) -> None:
        tmp = tmp_dir / (hashlib.sha256(key.encode()).hexdigest() + ".json.tmp")
        final = tmp_dir / (hashlib.sha256(key.encode()).hexdigest() + ".json")
        tmp.write_text(json.dumps({"key": key, "row": _json_safe(row)}, sort_keys=True))
        os.replace(tmp, final)
        produced[key] = row

    if config.jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            for key, row in pool.map(_sweep_task, todo):
                record(key, row)
    else:
        for args in todo:
            try:
                key, row = _sweep_task(args)
            except Exception as exc:
                point, seed = args[2], args[3]
                key = _point_key(point, seed)
                row = {**point, "seed": seed, "error": str(exc)}
                errors.append(f"{key}: {exc}")
            record(key, row)

    merged: dict[str, dict] = dict(existing)
    for key, row in produced.items():
        merged[key] = {k: v for k, v in row.items()}
    if not merged:
        raise RunError("sweep produced no rows")

    columns = sorted({c for row in merged.values() for c in row} - {"seed", "error"})
    has_error = any("error" in row for row in merged.values())
    header = ["key", "seed"] + columns + (["error"] if has_error else [])
    table = []
    for key in sorted(merged):
        row = merged[key]
        table.append([key, row.get("seed", "")] + [row.get(c, "") for c in columns]
                     + ([row.get("error", "")] if has_error else []))
    files = [write_csv(consolidated, header, table)]

    # aggregate per grid point over seeds
    groups: dict[str, list[dict]] = {}
    for key, row in merged.items():
        point_part = key.rsplit("|seed=", 1)[0]
        groups.setdefault(point_part, []).append(row)
    agg_rows = []
    numeric_cols = sorted({
        c for rows in groups.values() for row in rows for c, v in row.items()
        if c not in ("seed", "error") and _is_number(v)
    })
    for point_part in sorted(groups):
        rows = groups[point_part]
        entry = [point_part, len(rows)]
        for c in numeric_cols:
            vals = [float(r[c]) for r in rows if _is_number(r.get(c))]
            entry.append(statistics.fmean(vals) if vals else "")
        agg_rows.append(entry)
    files.append(write_csv(out / "aggregated.csv",
                           ["point", "n"] + [c + "_mean" for c in numeric_cols], agg_rows))

    manifest = write_manifest(out, files, {
        "kind": "sweep", "sub_kind": config.sub_kind,
        "seeds": config.seeds, "grid": _json_safe(config.grid),
    })
    return json.loads(manifest.read_text())


def _is_number(v) -> bool:
    if isinstance(v, bool):
        return False
    if isinstance(v, (int, float)):
        return math.isfinite(v)
    if isinstance(v, str):
        try:
            return math.isfinite(float(v))
        except ValueError:
            return False
    return False
