"""Command-line front end.

Thin shell over the library: every subcommand resolves an ExperimentConfig
(file plus flag overrides), calls library functions, and writes deterministic
artifacts. Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .battery import generate_fleet
from .config import (
    KEYS,
    ExperimentConfig,
    coerce,
    config_echo,
    load_config,
    parse_column_map,
    parse_groups_spec,
    parse_split,
)
from .errors import ConfigError, FedfleetError
from .federated import RoundPlan
from .nn import ArchSpec, TrainConfig, evaluate, init_model, train_local
from .pipeline import SplitSpec, prepare_vehicle
from .reporting import REPORT_VERSION, write_report
from .seeding import derive_seed
from .topology import (
    FleetSpec,
    GroupSpec,
    client_seed_root,
    compose_mixed_group,
    run_centralized,
    run_decentralized,
    select_performers,
)
from .trip import load_trip_csv, write_trip_csv

SWEEP_AXES = ("rounds", "split", "window")
SWEEP_DEFAULTS = {
    "rounds": "15,30,45,60",
    "split": "4:1:5,5:1:4,6:1:3,8:1:1",
    "window": "60,90,120,150,180",
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", default=None, help="key = value config file")
    for key in sorted(KEYS):
        flag = "--" + key.replace(".", "-").replace("_", "-")
        p.add_argument(flag, dest=f"k_{KEYS[key][0]}", metavar="V", default=None,
                       help=f"override config key {key}")


def _overrides(args) -> dict:
    out = {}
    for key, (name, _) in KEYS.items():
        raw = getattr(args, f"k_{name}", None)
        if raw is not None:
            out[key] = raw
    return out


def _resolve(args) -> ExperimentConfig:
    return load_config(args.config, _overrides(args))


def _load_fleet(cfg: ExperimentConfig):
    """Trip records per the configured source, in vehicle-id order."""
    if cfg.data_source == "synthetic":
        return generate_fleet(cfg.seed, cfg.data_fleet_size, duration=cfg.data_duration)
    paths = sorted(glob.glob(os.path.join(cfg.data_dir, "*.csv")))
    if not paths:
        raise ConfigError(f"no trip CSVs under {cfg.data_dir}")
    cmap = parse_column_map(cfg.data_column_map) if cfg.data_column_map else None
    return [load_trip_csv(p, column_map=cmap) for p in paths]


def _prepare(cfg: ExperimentConfig):
    split = SplitSpec(*parse_split(cfg.split))
    records = _load_fleet(cfg)
    vehicles = tuple(prepare_vehicle(rec, m=cfg.window, split=split) for rec in records)
    return FleetSpec(vehicles=vehicles)


def _plan(cfg: ExperimentConfig) -> RoundPlan:
    return RoundPlan(
        algorithm=cfg.algorithm,
        eta=cfg.sgd_eta,
        epochs=cfg.local_epochs,
        batch=cfg.local_batch,
        participation=cfg.participation,
        mu=cfg.prox_mu,
        anchor_mode=cfg.prox_anchor,
        partition_policy=cfg.partition_policy,
        local_mode=cfg.local_mode,
        lr=cfg.local_lr,
    )


def _rank_for_mix(cfg: ExperimentConfig, fleet: FleetSpec, arch: ArchSpec):
    """Local-baseline test MAE per vehicle, for good/weak group composition."""
    w0, _ = init_model(arch, derive_seed(cfg.seed, "init"))
    maes = {}
    for vid in fleet.ids():
        v = fleet.by_id(vid)
        seed_root = client_seed_root(cfg.seed, v)
        tc = TrainConfig(batch=cfg.local_batch, epochs=cfg.baseline_epochs,
                         seed=derive_seed(seed_root, "baseline"), lr=cfg.local_lr)
        model = train_local(w0, arch, v.train, tc)
        maes[vid] = evaluate(model, arch, v.test)
    return maes


def _groups_for(cfg: ExperimentConfig, fleet: FleetSpec, arch: ArchSpec) -> GroupSpec:
    spec = parse_groups_spec(cfg.groups)
    if spec[0] == "all":
        return GroupSpec(groups=(tuple(fleet.ids()),))
    if spec[0] == "ids":
        return GroupSpec(groups=spec[1])
    _, n_g, n_w = spec
    maes = _rank_for_mix(cfg, fleet, arch)
    try:
        g_ranked, w_ranked = select_performers(maes, max(n_g, n_w))
    except ValueError as exc:
        raise ConfigError(f"groups={cfg.groups!r} infeasible: {exc}") from None
    members = compose_mixed_group(g_ranked, w_ranked, n_g, n_w)
    labels = {vid: "G" for vid in g_ranked[:n_g]}
    labels.update({vid: "W" for vid in w_ranked[:n_w]})
    return GroupSpec(groups=(members,), labels=labels)


def _execute_run(cfg: ExperimentConfig, out_dir: str):
    arch = ArchSpec(kind=cfg.arch_kind, window=cfg.window)
    fleet = _prepare(cfg)
    plan = _plan(cfg)
    baseline_cfg = TrainConfig(batch=cfg.local_batch, epochs=cfg.baseline_epochs, lr=cfg.local_lr)
    echo = config_echo(cfg)
    if cfg.topology == "centralized":
        rep = run_centralized(fleet, arch, plan, cfg.rounds, seed=cfg.seed,
                              baseline_cfg=baseline_cfg, report_select=cfg.report_select,
                              config_echo=echo)
    else:
        groups = _groups_for(cfg, fleet, arch)
        rep = run_decentralized(fleet, groups, arch, plan, cfg.rounds, seed=cfg.seed,
                                baseline_cfg=baseline_cfg, report_select=cfg.report_select,
                                config_echo=echo)
    write_report(rep, out_dir)
    return rep


def cmd_gen_data(args) -> int:
    cfg = _resolve(args)
    if cfg.data_source != "synthetic":
        raise ConfigError("gen-data requires data.source = synthetic")
    os.makedirs(cfg.data_dir, exist_ok=True)
    records = generate_fleet(cfg.seed, cfg.data_fleet_size, duration=cfg.data_duration)
    for rec in records:
        write_trip_csv(rec, os.path.join(cfg.data_dir, f"{rec.vehicle_id}.csv"))
    print(f"wrote {len(records)} trip files ({cfg.data_duration} rows each) to {cfg.data_dir}")
    return 0


def cmd_run(args) -> int:
    cfg = _resolve(args)
    rep = _execute_run(cfg, cfg.out_dir)
    improved = sum(
        1 for vid in rep.client_ids if rep.selected_test[vid] < rep.baseline_test[vid]
    )
    print(f"run complete: {cfg.out_dir} algorithm={rep.algorithm} rounds={rep.rounds} "
          f"vehicles={len(rep.client_ids)} improved={improved}/{len(rep.client_ids)}")
    return 0


def _sweep_value_dir(axis: str, value: str) -> str:
    return f"{axis}-{value.replace(':', '-')}"


def _apply_axis(cfg: ExperimentConfig, axis: str, value: str) -> ExperimentConfig:
    if axis == "rounds":
        return replace(cfg, rounds=int(value))
    if axis == "split":
        parse_split(value)
        return replace(cfg, split=value)
    return replace(cfg, window=int(value))


def cmd_sweep(args) -> int:
    cfg = _resolve(args)
    axis = args.axis
    values = [v.strip() for v in (args.values or SWEEP_DEFAULTS[axis]).split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep needs at least one value")
    for v in values:
        _apply_axis(cfg, axis, v).validate()  # reject the whole sweep up front

    os.makedirs(cfg.out_dir, exist_ok=True)
    meta_rows = []
    columns = {}
    baseline_col = None
    failed = None
    for v in values:
        point = _apply_axis(cfg, axis, v)
        sub = os.path.join(cfg.out_dir, _sweep_value_dir(axis, v))
        try:
            rep = _execute_run(point, sub)
        except (FedfleetError, ValueError, OSError) as exc:
            meta_rows.append((v, f"failed: {exc}", "", sub))
            failed = v
            break
        meta_rows.append((v, "ok", _window_counts(rep), sub))
        columns[v] = {vid: rep.selected_test[vid] for vid in rep.client_ids}
        if baseline_col is None:
            baseline_col = (v, dict(rep.baseline_test))
    _write_sweep_tables(cfg.out_dir, axis, values, columns, baseline_col, meta_rows)
    if failed is not None:
        print(f"sweep aborted at {axis}={failed}; partial results in {cfg.out_dir}")
        return 2
    print(f"sweep complete: {cfg.out_dir} axis={axis} values={','.join(values)}")
    return 0


def _window_counts(rep) -> str:
    echo = rep.config_echo
    n = int(echo.get("data.duration", 0)) - int(echo.get("window", 0)) + 1
    return str(n)


def _write_sweep_tables(out_dir, axis, values, columns, baseline_col, meta_rows):
    done = [v for v in values if v in columns]
    vids = sorted(set().union(*[columns[v] for v in done])) if done else []
    lines = []
    header = ["vehicle"]
    if baseline_col is not None:
        header.append(f"baseline[{axis}={baseline_col[0]}]")
    header += [f"{axis}={v}" for v in done]
    lines.append(",".join(header) + "\n")
    for vid in vids:
        row = [vid]
        if baseline_col is not None:
            row.append(repr(float(baseline_col[1][vid])))
        row += [repr(float(columns[v][vid])) for v in done]
        lines.append(",".join(row) + "\n")
    with open(os.path.join(out_dir, "sweep.csv"), "w") as fh:
        fh.writelines(lines)
    with open(os.path.join(out_dir, "sweep_meta.csv"), "w") as fh:
        fh.write("value,status,windows_per_vehicle,run_dir\n")
        for v, status, counts, sub in meta_rows:
            fh.write(f"{v},{status},{counts},{os.path.basename(sub)}\n")


def _read_report(path: str) -> dict:
    if os.path.isdir(path):
        path = os.path.join(path, "report.json")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read report {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed report {path}: {exc}") from None
    if data.get("version") != REPORT_VERSION:
        raise ConfigError(
            f"report schema version {data.get('version')!r} != {REPORT_VERSION} in {path}"
        )
    return data


MERGE_IGNORED_KEYS = ("seed", "out.dir")  # provenance, not experimental parameters


def _echo_without_seed(data: dict) -> tuple:
    return tuple(sorted(
        (k, v) for k, v in data.get("config_echo", {}).items() if k not in MERGE_IGNORED_KEYS
    ))


def _render_table(rows, header) -> str:
    """Plain text columns; the minimal MAE cell per row is starred."""
    out_rows = [header]
    for name, cells in rows:
        numeric = [c for c in cells if c is not None]
        best = min(numeric) if numeric else None
        rendered = [name]
        for c in cells:
            if c is None:
                rendered.append("-")
            else:
                mark = "*" if c == best else ""
                rendered.append(f"{c:.6f}{mark}")
        out_rows.append(rendered)
    widths = [max(len(r[i]) for r in out_rows) for i in range(len(header))]
    return "".join(
        "  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() + "\n" for r in out_rows
    )


def cmd_report(args) -> int:
    reports = [_read_report(p) for p in args.paths]
    by_cfg = {}
    for data in reports:
        by_cfg.setdefault(_echo_without_seed(data), []).append(data)
    if len(by_cfg) > 1 and len(reports) > 1:
        raise ConfigError("reports disagree on configuration beyond the seed; cannot merge")
    group = reports
    vids = sorted(set().union(*[set(d["baseline_test"]) for d in group]))
    header = ["vehicle", "baseline", "federated"]
    rows = []
    if len(group) == 1:
        d = group[0]
        for vid in vids:
            rows.append((vid, [d["baseline_test"].get(vid), d["selected_test"].get(vid)]))
        csv_lines = ["vehicle,baseline_test_mae,selected_test_mae,best\n"]
        for vid, cells in rows:
            best = "baseline" if cells[0] <= cells[1] else "federated"
            csv_lines.append(f"{vid},{cells[0]!r},{cells[1]!r},{best}\n")
    else:
        header = ["vehicle", "baseline(mean+/-spread)", "federated(mean+/-spread)"]
        csv_lines = ["vehicle,baseline_mean,baseline_spread,selected_mean,selected_spread\n"]
        out_rows = [header]
        for vid in vids:
            base = [d["baseline_test"][vid] for d in group]
            sel = [d["selected_test"][vid] for d in group]
            bm, bs = float(np.mean(base)), float(np.std(base))
            sm, ss = float(np.mean(sel)), float(np.std(sel))
            star = "*" if sm < bm else ""
            out_rows.append([vid, f"{bm:.6f}+/-{bs:.6f}", f"{sm:.6f}+/-{ss:.6f}{star}"])
            csv_lines.append(f"{vid},{bm!r},{bs!r},{sm!r},{ss!r}\n")
        widths = [max(len(r[i]) for r in out_rows) for i in range(len(header))]
        text = "".join(
            "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n" for r in out_rows
        )
        sys.stdout.write(text)
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            with open(os.path.join(args.out, "table.csv"), "w") as fh:
                fh.writelines(csv_lines)
            with open(os.path.join(args.out, "table.txt"), "w") as fh:
                fh.write(text)
        return 0
    text = _render_table(rows, header)
    sys.stdout.write(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "table.csv"), "w") as fh:
            fh.writelines(csv_lines)
        with open(os.path.join(args.out, "table.txt"), "w") as fh:
            fh.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedfleet",
        description="Fleet energy-model training: data generation, federated runs, sweeps, reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write synthetic per-vehicle trip CSVs")
    _add_config_flags(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("run", help="train one experiment and write its report")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="repeat a run across one axis")
    _add_config_flags(p)
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", default=None, help="comma list; defaults per axis")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="render tables from run reports")
    p.add_argument("paths", nargs="+", help="run directories or report.json files")
    p.add_argument("--out", default=None, help="directory for rendered files")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1
    except (FedfleetError, ValueError, OSError) as exc:
        print(f"error: runtime: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
