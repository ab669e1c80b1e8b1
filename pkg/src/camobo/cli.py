"""Command-line surface: run management, persistence, plot-data emission.

Traces are CSV with a fixed header order and all numerics serialized with 17
significant digits, so identical configs and seeds reproduce byte-identical
files. Summaries are JSON; aggregates across repeats are CSV. ``plotdata``
re-reads a directory of traces and emits long-format CSVs (one row per seed
and iteration) from which the hypervolume, regret, usage-sum, and Pareto
panels can be redrawn in any plotting tool.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .driver import (
    ExternalSpec,
    RunAborted,
    RunConfig,
    RunTrace,
    aggregate_traces,
    run_repeats,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    """Invalid, unknown, or missing configuration keys."""


class MalformedTraceError(ValueError):
    """A trace CSV could not be parsed back."""


_TOP_KEYS = {
    "problem": str,
    "iterations": int,
    "n_init": int,
    "seed": int,
    "mode": str,
    "cost_indices": list,
    "policy": str,
    "candidate_count": int,
    "refine_steps": int,
    "hyper_refit_period": int,
    "repeats": int,
    "force_zero_cost": bool,
    "standard_forms": bool,
    "oracle_grid_size": int,
    "benchmark_grid_size": int,
    "out_dir": str,
}
_REQUIRED_KEYS = ("problem", "iterations")
_EXTERNAL_KEYS = {
    "command": list,
    "raw_bounds": list,
    "senses": list,
    "objective_bounds": list,
    "timeout": (int, float),
}


def _canonical(value: str) -> str:
    return value.replace("-", "_")


def load_config(path: str | Path) -> tuple[RunConfig, str | None]:
    """Parse a TOML config file into a RunConfig plus its out_dir, if any."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}")
    return config_from_dict(data, source=str(path))


def config_from_dict(data: dict, source: str = "<config>") -> tuple[RunConfig, str | None]:
    unknown = set(data) - set(_TOP_KEYS) - {"external"}
    if unknown:
        raise ConfigError(f"{source}: unknown config keys: {sorted(unknown)}")
    for key in _REQUIRED_KEYS:
        if key not in data:
            raise ConfigError(f"{source}: missing required key '{key}'")
    for key, expected in _TOP_KEYS.items():
        if key in data and not isinstance(data[key], expected):
            raise ConfigError(
                f"{source}: key '{key}' must be {expected.__name__}, got {type(data[key]).__name__}"
            )

    external = None
    if "external" in data:
        ext = data["external"]
        if not isinstance(ext, dict):
            raise ConfigError(f"{source}: [external] must be a table")
        unknown = set(ext) - set(_EXTERNAL_KEYS)
        if unknown:
            raise ConfigError(f"{source}: unknown [external] keys: {sorted(unknown)}")
        if "command" not in ext or "raw_bounds" not in ext:
            raise ConfigError(f"{source}: [external] requires 'command' and 'raw_bounds'")
        try:
            external = ExternalSpec(
                command=tuple(str(c) for c in ext["command"]),
                raw_bounds=tuple((float(lo), float(hi)) for lo, hi in ext["raw_bounds"]),
                senses=tuple(str(s) for s in ext["senses"]) if "senses" in ext else None,
                objective_bounds=(
                    tuple((float(lo), float(hi)) for lo, hi in ext["objective_bounds"])
                    if "objective_bounds" in ext
                    else None
                ),
                timeout=float(ext.get("timeout", 600.0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{source}: invalid [external] section: {exc}")

    kwargs = {k: v for k, v in data.items() if k in _TOP_KEYS and k != "out_dir"}
    if "cost_indices" in kwargs:
        kwargs["cost_indices"] = tuple(int(i) for i in kwargs["cost_indices"])
    if "mode" in kwargs:
        kwargs["mode"] = _canonical(kwargs["mode"])
    if "policy" in kwargs:
        kwargs["policy"] = _canonical(kwargs["policy"])
    try:
        config = RunConfig(external=external, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}")
    return config, data.get("out_dir")


def _fmt(value) -> str:
    if value is None:
        return ""
    return "%.17g" % value


def trace_header(n_dims: int, n_objectives: int) -> list[str]:
    cols = ["t"]
    cols += [f"x_{i}" for i in range(1, n_dims + 1)]
    cols += [f"y_raw_{m}" for m in range(1, n_objectives + 1)]
    cols += [f"y_norm_{m}" for m in range(1, n_objectives + 1)]
    cols += [f"theta_{m}" for m in range(1, n_objectives + 1)]
    cols += ["beta", "q", "c", "alpha", "regret_inst", "regret_cum", "regret_avg", "hypervolume"]
    return cols


def write_trace_csv(trace: RunTrace, path: str | Path) -> None:
    path = Path(path)
    lines = [",".join(trace_header(trace.n_dims, trace.n_objectives))]
    for r in trace.records:
        row = [str(r.t)]
        row += [_fmt(v) for v in r.x]
        row += [_fmt(v) for v in r.y_raw]
        row += [_fmt(v) for v in r.y_norm]
        row += [_fmt(v) for v in r.theta]
        row += [_fmt(r.beta), _fmt(r.q), _fmt(r.c), _fmt(r.alpha)]
        row += [_fmt(r.regret_inst), _fmt(r.regret_cum), _fmt(r.regret_avg)]
        row += [_fmt(r.hypervolume)]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def read_trace_csv(path: str | Path) -> dict:
    """Parse a trace back into column arrays; inverse of write_trace_csv."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise MalformedTraceError(f"{path}: {exc}")
    if not lines:
        raise MalformedTraceError(f"{path}: empty trace file")
    header = lines[0].split(",")
    n_dims = sum(1 for h in header if h.startswith("x_"))
    n_objectives = sum(1 for h in header if h.startswith("y_raw_"))
    if header != trace_header(n_dims, n_objectives):
        raise MalformedTraceError(f"{path}: unexpected header {header!r}")
    columns: dict[str, list] = {h: [] for h in header}
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise MalformedTraceError(f"{path}: line {lineno} has {len(cells)} cells, expected {len(header)}")
        for h, cell in zip(header, cells):
            if h == "t":
                try:
                    columns[h].append(int(cell))
                except ValueError:
                    raise MalformedTraceError(f"{path}: line {lineno}: bad iteration {cell!r}")
            elif cell == "":
                columns[h].append(None)
            else:
                try:
                    columns[h].append(float(cell))
                except ValueError:
                    raise MalformedTraceError(f"{path}: line {lineno}: bad number {cell!r}")
    return {
        "path": path,
        "n_dims": n_dims,
        "n_objectives": n_objectives,
        "columns": columns,
        "t": np.array(columns["t"], dtype=int),
    }


def write_summary_json(trace: RunTrace, path: str | Path) -> None:
    final = trace.records[-1] if trace.records else None
    config = asdict(trace.config)
    if config.get("external") and config["external"].get("command"):
        config["external"]["command"] = list(config["external"]["command"])
    payload = {
        "seed": trace.seed,
        "config": config,
        "n_dims": trace.n_dims,
        "n_objectives": trace.n_objectives,
        "n_observations": len(trace.records) + trace.init_x.shape[0],
        "cost_weights": list(trace.cost_weights.w) if trace.cost_weights else None,
        "usage_sums": trace.usage().tolist(),
        "final_hypervolume": final.hypervolume if final else None,
        "final_avg_regret": final.regret_avg if final else None,
        "final_cum_regret": final.regret_cum if final else None,
        "init": {
            "x": trace.init_x.tolist(),
            "y_raw": trace.init_y_raw.tolist(),
        },
        "dominant": [
            {"x": x.tolist(), "y_raw": y.tolist()} for x, y in trace.dominant
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_aggregate_csv(traces: list[RunTrace], path: str | Path) -> None:
    agg = aggregate_traces(traces)
    n_dims = traces[0].n_dims
    cols = ["t"]
    for name in ("hypervolume", "avg_regret", "cum_regret"):
        cols += [f"{name}_{stat}" for stat in ("median", "q25", "q75")]
    for i in range(1, n_dims + 1):
        cols += [f"usage_x{i}_{stat}" for stat in ("median", "q25", "q75")]
    lines = [",".join(cols)]
    for k, t in enumerate(agg.t):
        row = [str(int(t))]
        for block in (agg.hypervolume, agg.avg_regret, agg.cum_regret):
            for stat in ("median", "q25", "q75"):
                row.append(_fmt(block[stat][k]) if block is not None else "")
        for i in range(n_dims):
            for stat in ("median", "q25", "q75"):
                row.append(_fmt(agg.usage[stat][k, i]))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_seed_from_name(path: Path) -> str:
    stem = path.stem
    return stem.split("_", 1)[1] if "_" in stem else stem


def cmd_plotdata(trace_dir: str | Path, out_dir: str | Path | None = None) -> int:
    """Emit long-format plot CSVs from a directory of trace files."""
    trace_dir = Path(trace_dir)
    paths = sorted(trace_dir.glob("trace_*.csv"))
    if not paths:
        print(f"no trace_*.csv files found in {trace_dir}", file=sys.stderr)
        return EXIT_RUNTIME
    out = Path(out_dir) if out_dir else trace_dir / "plotdata"
    out.mkdir(parents=True, exist_ok=True)
    try:
        traces = [(p, read_trace_csv(p)) for p in paths]
    except MalformedTraceError as exc:
        print(f"malformed trace: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    n_dims = traces[0][1]["n_dims"]
    n_obj = traces[0][1]["n_objectives"]

    hv_lines = ["seed,t,hypervolume"]
    avg_lines = ["seed,t,avg_regret"]
    cum_lines = ["seed,t,cum_regret"]
    usage_lines = ["seed,t," + ",".join(f"usage_x{i}" for i in range(1, n_dims + 1))]
    pareto_lines = [
        "seed,"
        + ",".join(f"x_{i}" for i in range(1, n_dims + 1))
        + ","
        + ",".join(f"y_norm_{m}" for m in range(1, n_obj + 1))
    ]

    for path, tr in traces:
        seed = _parse_seed_from_name(path)
        cols = tr["columns"]
        xs = np.array([[cols[f"x_{i}"][k] for i in range(1, n_dims + 1)] for k in range(len(tr["t"]))])
        running = np.cumsum(xs, axis=0)
        for k, t in enumerate(tr["t"]):
            hv_lines.append(f"{seed},{t},{_fmt(cols['hypervolume'][k])}")
            if cols["regret_avg"][k] is not None:
                avg_lines.append(f"{seed},{t},{_fmt(cols['regret_avg'][k])}")
                cum_lines.append(f"{seed},{t},{_fmt(cols['regret_cum'][k])}")
            usage_lines.append(
                f"{seed},{t}," + ",".join(_fmt(v) for v in running[k])
            )
        ys = np.array(
            [[cols[f"y_norm_{m}"][k] for m in range(1, n_obj + 1)] for k in range(len(tr["t"]))]
        )
        from .metrics import pareto_filter

        for idx in pareto_filter(ys):
            pareto_lines.append(
                f"{seed},"
                + ",".join(_fmt(v) for v in xs[idx])
                + ","
                + ",".join(_fmt(v) for v in ys[idx])
            )

    (out / "hypervolume_vs_t.csv").write_text("\n".join(hv_lines) + "\n")
    (out / "avg_regret_vs_t.csv").write_text("\n".join(avg_lines) + "\n")
    (out / "cum_regret_vs_t.csv").write_text("\n".join(cum_lines) + "\n")
    (out / "usage_sums_vs_t.csv").write_text("\n".join(usage_lines) + "\n")
    (out / "pareto_points.csv").write_text("\n".join(pareto_lines) + "\n")
    print(f"wrote plot data for {len(traces)} trace(s) to {out}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config, cfg_out = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.mode is not None:
            overrides["mode"] = _canonical(args.mode)
        if args.policy is not None:
            overrides["policy"] = _canonical(args.policy)
        if args.repeats is not None:
            overrides["repeats"] = args.repeats
        if args.standard_forms:
            overrides["standard_forms"] = True
        if overrides:
            from dataclasses import replace

            config = replace(config, **overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(args.out or cfg_out or "runs")
    out_dir.mkdir(parents=True, exist_ok=True)

    try:
        traces, _, failures = run_repeats(config, workers=args.workers)
    except RunAborted as exc:
        if exc.partial is not None:
            partial_path = out_dir / f"trace_{exc.partial.seed}.partial.csv"
            write_trace_csv(exc.partial, partial_path)
            print(f"run aborted; partial trace flushed to {partial_path}", file=sys.stderr)
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    for trace in traces:
        write_trace_csv(trace, out_dir / f"trace_{trace.seed}.csv")
        write_summary_json(trace, out_dir / f"summary_{trace.seed}.json")
    write_aggregate_csv(traces, out_dir / "aggregate.csv")
    for trace in traces:
        final = trace.records[-1]
        print(
            f"seed {trace.seed}: hv={final.hypervolume:.4f} "
            f"usage={np.array2string(trace.usage(), precision=2)}"
        )
    if failures:
        print(f"{len(failures)} run(s) failed: {failures}", file=sys.stderr)
    print(f"artifacts written to {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="camobo", description=__doc__)
    parser.add_argument("--version", action="version", version=f"camobo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an optimization run (or repeats)")
    run_p.add_argument("--config", required=True, help="TOML config file")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--mode", choices=["ca-mobo", "mo-ucb", "ca_mobo", "mo_ucb"], default=None)
    run_p.add_argument(
        "--policy",
        choices=["paper-literal", "behavior-matching", "paper_literal", "behavior_matching"],
        default=None,
    )
    run_p.add_argument("--repeats", type=int, default=None)
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--workers", type=int, default=1, help="parallel repeat workers")
    run_p.add_argument("--standard-forms", action="store_true", help="canonical benchmark variants")
    run_p.set_defaults(func=cmd_run)

    plot_p = sub.add_parser("plotdata", help="emit plot-ready CSVs from traces")
    plot_p.add_argument("trace_dir", help="directory containing trace_*.csv")
    plot_p.add_argument("--out", default=None, help="output directory (default: <dir>/plotdata)")
    plot_p.set_defaults(func=lambda a: cmd_plotdata(a.trace_dir, a.out))

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
