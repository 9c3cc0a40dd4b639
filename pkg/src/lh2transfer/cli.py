"""Command-line front end: ``simulate``, ``sweep``, ``ugsa`` and ``tune``.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 simulation
abort, 3 more than 5 % of UGSA samples failed.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import pathlib
import sys

import numpy as np

from .config import SCHEMA_VERSION, ConfigError, ScenarioConfig, load_config

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_UGSA = 0, 1, 2, 3
UGSA_FAIL_LIMIT = 0.05

KPI_FIELDS = ("relative_bog", "relative_power", "filling_time", "mean_bog_flow",
              "max_bog_flow", "bog_mass", "shaft_energy", "completed")


# ---------------------------------------------------------------------------
# file helpers
# ---------------------------------------------------------------------------

def header_line(config: ScenarioConfig) -> str:
    return f"# lh2transfer schema={SCHEMA_VERSION} config={config.digest()} seed={config.ugsa.seed}"


def write_csv(path: pathlib.Path, config: ScenarioConfig, columns, rows) -> None:
    """CSV with a provenance comment line, then the column header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(header_line(config) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_json(path: pathlib.Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_directory(out_dir, config: ScenarioConfig, tag: str = "") -> pathlib.Path:
    stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    base = pathlib.Path(out_dir) / f"{tag}{config.digest()}-{stamp}"
    path, k = base, 1
    while path.exists():
        path = base.with_name(f"{base.name}-{k}")
        k += 1
    path.mkdir(parents=True)
    return path


def write_resolved(path: pathlib.Path, config: ScenarioConfig) -> None:
    write_json(path / "config.resolved", config.to_dict())


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args, config: ScenarioConfig) -> int:
    from .sim.analysis import entropy_report, kpi_record, simulate, ts_diagram
    from .sim.flowsheet import InitializationError, SimulationAbort

    try:
        traj = simulate(config)
    except (SimulationAbort, InitializationError) as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    rec = kpi_record(traj)
    ent = entropy_report(traj)
    points, steady = ts_diagram(traj)

    out = run_directory(args.out_dir, config)
    write_resolved(out, config)
    names, table = traj.table()
    write_csv(out / "trajectory.csv", config, names, table.tolist())
    kpi = {"schema": SCHEMA_VERSION, "config": config.digest(), "seed": config.ugsa.seed,
           "mode": config.control.mode, **rec.to_dict(),
           "entropy_rate_total": ent.total_rate, "entropy_total": ent.total,
           "exergy_destroyed": ent.exergy()}
    write_json(out / "kpi.json", kpi)
    write_csv(out / "entropy.csv", config,
              ["element", "rate_W_per_K", "integral_J_per_K", "exergy_rate_W", "exergy_J",
               "snapshot_time_s", "steady"],
              [(*row, ent.snapshot_time, ent.steady) for row in ent.rows()])
    write_csv(out / "tsdiagram.csv", config,
              ["point", "pressure_Pa", "enthalpy_J_per_kg", "temperature_K", "entropy_J_per_kgK", "steady"],
              [(p.label, p.pressure, p.enthalpy, p.temperature, p.entropy, steady) for p in points])
    print(f"{out}")
    print(f"relative BOG {rec.relative_bog:.4f} wt%, relative power {rec.relative_power:.2f} kJ/m3, "
          f"filling time {rec.filling_time:.2f} h")
    return EXIT_OK


def parse_values(text: str, parameter: str) -> list:
    """``a,b,c`` or ``start:stop:step`` (stop included when it lands on the grid)."""
    if parameter == "control.mode":
        return [v.strip() for v in text.split(",") if v.strip()]
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if step <= 0 or stop < start:
            raise ConfigError(f"bad range {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]
    return [float(v) for v in text.split(",") if v.strip()]


def _pool_map(workers: int):
    if workers <= 1:
        return map, None
    from concurrent.futures import ProcessPoolExecutor
    pool = ProcessPoolExecutor(max_workers=workers)
    return pool.map, pool


def cmd_sweep(args, config: ScenarioConfig) -> int:
    from .sim.analysis import SWEEP_PARAMETERS, sweep

    if args.parameter not in SWEEP_PARAMETERS:
        print(f"cannot sweep {args.parameter!r}; choose from {', '.join(SWEEP_PARAMETERS)}",
              file=sys.stderr)
        return EXIT_CONFIG
    try:
        values = parse_values(args.values, args.parameter)
        if args.parameter == "control.mode":
            modes = [None]
        else:
            modes = [m.strip() for m in args.modes.split(",")]
        cfgs = [config if m is None else config.replace(**{"control.mode": m}) for m in modes]
        for v in values:  # validate every point before running anything
            for c in cfgs:
                c.replace(**{args.parameter: v})
    except ConfigError as exc:
        print(f"invalid sweep: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows = []
    map_fn, pool = _pool_map(args.workers)
    try:
        for m, cfg in zip(modes, cfgs):
            for pt in sweep(args.parameter, values, cfg, map_fn=map_fn):
                mode = pt.value if m is None else m
                r = pt.record
                vals = [getattr(r, f) if r else "" for f in KPI_FIELDS]
                rows.append([args.parameter, pt.value, mode, *vals, pt.error])
    finally:
        if pool is not None:
            pool.shutdown()
    out = run_directory(args.out_dir, config, "sweep-")
    write_resolved(out, config)
    write_csv(out / "sweep.csv", config, ["parameter", "value", "mode", *KPI_FIELDS, "error"], rows)
    print(out)
    failed = sum(1 for r in rows if r[-1])
    if failed:
        print(f"{failed} of {len(rows)} sweep points failed", file=sys.stderr)
    return EXIT_OK


def _record_from_json(d):
    from .sim.analysis import KpiRecord
    return KpiRecord(**d) if d is not None else None


def cmd_ugsa(args, config: ScenarioConfig) -> int:
    from .ugsa import BatchResult, ParameterSpace, kpi_statistics, lhs_sample, run_batch
    from .ugsa import sensitivity_indices

    if args.n is not None:
        config = config.replace(**{"ugsa.n": args.n})
    u = config.ugsa
    space = ParameterSpace.from_config(u.parameters)
    samples = lhs_sample(space, u.n, u.seed)
    # one directory per resolved configuration, so a rerun resumes it
    out = pathlib.Path(args.out_dir) / f"ugsa-{config.digest()}"
    part = out / "samples"
    part.mkdir(parents=True, exist_ok=True)
    write_resolved(out, config)
    write_csv(out / "samples.csv", config, ["index", *samples.names],
              [[i, *row] for i, row in enumerate(samples.values)])

    def path_for(i):
        return part / f"{i:06d}.json"

    def save(r: BatchResult):
        rec = r.record.to_dict() if r.record else None
        tmp = path_for(r.index).with_suffix(".tmp")
        tmp.write_text(json.dumps({"index": r.index, "values": list(r.values),
                                   "record": rec, "error": r.error}), encoding="utf-8")
        tmp.replace(path_for(r.index))

    todo = [i for i in range(u.n) if not path_for(i).exists()]
    if len(todo) < u.n:
        print(f"resuming: {u.n - len(todo)} of {u.n} samples already on disk")
    run_batch(samples.values, samples.names, config, indices=todo, workers=args.workers,
              on_result=save)

    results = []
    for i in range(u.n):
        d = json.loads(path_for(i).read_text(encoding="utf-8"))
        results.append(BatchResult(d["index"], tuple(d["values"]), _record_from_json(d["record"]),
                                   d["error"]))
    write_csv(out / "records.csv", config, ["index", *KPI_FIELDS, "error"],
              [[r.index, *[getattr(r.record, f) if r.record else "" for f in KPI_FIELDS], r.error]
               for r in results])
    ok = [r for r in results if r.ok]
    failed = len(results) - len(ok)
    if ok:
        X = np.array([r.values for r in ok])
        gsa_rows = []
        for kpi in ("relative_bog", "relative_power"):
            y = np.array([getattr(r.record, kpi) for r in ok])
            res = sensitivity_indices(X, y, samples.names, resamples=u.resamples, seed=u.seed)
            for row in res.rows():
                gsa_rows.append([kpi, *row, res.classes])
        write_csv(out / "gsa.csv", config,
                  ["kpi", "parameter", "delta", "delta_ci_low", "delta_ci_high",
                   "s1", "s1_ci_low", "s1_ci_high", "classes"], gsa_rows)
        stats = kpi_statistics([r.record for r in ok], bins=u.bins)
        hist_rows, summary = [], {}
        for name, s in stats.items():
            for k, c in enumerate(s.counts):
                hist_rows.append([name, k, s.edges[k], s.edges[k + 1], int(c)])
            summary[name] = {"mean": s.mean, "min": s.minimum, "max": s.maximum, "std": s.std,
                             "skewness": s.skewness,
                             "exceed": {repr(t): n for t, n in s.exceed.items()}}
        write_csv(out / "histogram.csv", config, ["kpi", "bin", "low", "high", "count"], hist_rows)
        write_json(out / "summary.json", {"schema": SCHEMA_VERSION, "config": config.digest(),
                                          "seed": u.seed, "n": u.n, "failed": failed,
                                          "kpis": summary})
    print(out)
    if failed:
        print(f"{failed} of {u.n} samples failed", file=sys.stderr)
    if failed > UGSA_FAIL_LIMIT * u.n:
        return EXIT_UGSA
    return EXIT_OK


def cmd_tune(args, config: ScenarioConfig) -> int:
    from .sim.flowsheet import InitializationError, SimulationAbort
    from .sim.tuning import tuning_report

    try:
        rows = tuning_report(config)
    except (SimulationAbort, InitializationError) as exc:
        print(f"step test aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    out = run_directory(args.out_dir, config, "tune-")
    write_resolved(out, config)
    write_csv(out / "tuning.csv", config,
              ["loop", "mode", "gain", "time_constant_s", "dead_time_s", "controller_gain",
               "integral_time_s", "flagged", "note"],
              [(r.loop, r.mode, r.gain, r.time_constant, r.dead_time, r.controller_gain,
                r.integral_time, r.flagged, r.note) for r in rows])
    print(out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _common(suppress: bool) -> argparse.ArgumentParser:
    # subcommand copies must not overwrite flags given before the subcommand
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=d(None), help="scenario TOML (or a config.resolved JSON)")
    common.add_argument("--set", dest="overrides", action="append", default=d([]),
                        metavar="SECTION.KEY=VALUE", help="override one config value (repeatable)")
    common.add_argument("--seed", type=int, default=d(None), help="UGSA sampling and bootstrap seed")
    common.add_argument("--workers", type=int, default=d(1), help="parallel worker processes")
    common.add_argument("--out-dir", default=d("runs"), help="parent directory for outputs")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    p = argparse.ArgumentParser(prog="lh2transfer", parents=[_common(suppress=False)],
                                description="Liquid-hydrogen ship loading simulator.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="one loading run")
    sw = sub.add_parser("sweep", parents=[common], help="KPIs over a parameter range")
    sw.add_argument("parameter", help="seaborne.max_working_pressure, control.flow_setpoint or control.mode")
    sw.add_argument("values", help="comma list or start:stop:step")
    sw.add_argument("--modes", default="split-range,fixed-speed", help="pump modes to run")
    ug = sub.add_parser("ugsa", parents=[common], help="uncertainty and sensitivity campaign")
    ug.add_argument("--n", type=int, help="number of samples (overrides ugsa.n)")
    sub.add_parser("tune", parents=[common], help="step tests and SIMC settings")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"ugsa.seed={args.seed}")
    try:
        config = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    handler = {"simulate": cmd_simulate, "sweep": cmd_sweep, "ugsa": cmd_ugsa, "tune": cmd_tune}
    return handler[args.command](args, config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
