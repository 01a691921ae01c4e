"""Deterministic experiment output.

A run directory contains report.json, tables/*.csv, and checkpoints/*.ffcp,
all rendered with repr() floats and sorted keys so two runs of the same
configuration produce byte-identical files. Wall-clock timings go to a
timing.txt sidecar, the one file allowed to differ between reruns.
"""

from __future__ import annotations

import json
import os

from .nn import save_checkpoint
from .topology import REPORT_VERSION, CrossEval, ExperimentReport

DETERMINISTIC_FILES = ("report.json",)
TIMING_FILE = "timing.txt"


def _float(x) -> float:
    return float(x)


def _cross_dict(ce: CrossEval) -> dict:
    return {
        "ids": list(ce.ids),
        "matrix": [[_float(v) for v in row] for row in ce.matrix],
        "row_means": [_float(v) for v in ce.row_means],
    }


def report_to_dict(rep: ExperimentReport) -> dict:
    """JSON-ready view of a report; excludes params and wall-clock."""
    out = {
        "version": rep.version,
        "seed": rep.seed,
        "topology": rep.topology,
        "algorithm": rep.algorithm,
        "arch_kind": rep.arch_kind,
        "rounds": rep.rounds,
        "client_ids": list(rep.client_ids),
        "groups": [list(g) for g in rep.groups],
        "group_labels": dict(sorted(rep.group_labels.items())),
        "report_select": rep.report_select,
        "split_sizes": {k: list(v) for k, v in sorted(rep.split_sizes.items())},
        "baseline_val": {k: _float(v) for k, v in sorted(rep.baseline_val.items())},
        "baseline_test": {k: _float(v) for k, v in sorted(rep.baseline_test.items())},
        "round_val": [{k: _float(v) for k, v in sorted(d.items())} for d in rep.round_val],
        "round_test": [{k: _float(v) for k, v in sorted(d.items())} for d in rep.round_test],
        "selected_round": dict(sorted(rep.selected_round.items())),
        "selected_test": {k: _float(v) for k, v in sorted(rep.selected_test.items())},
        "cross_baseline": _cross_dict(rep.cross_baseline),
        "cross_final": _cross_dict(rep.cross_final) if rep.cross_final else None,
        "config_echo": dict(sorted(rep.config_echo.items())),
    }
    return out


def render_json(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _csv_line(cells) -> str:
    return ",".join(repr(c) if isinstance(c, float) else str(c) for c in cells) + "\n"


def per_round_table(rep: ExperimentReport) -> str:
    """round,vehicle,val_mae,test_mae rows in (round, vehicle) order."""
    lines = [_csv_line(["round", "vehicle", "val_mae", "test_mae"])]
    for t, (rv, rt) in enumerate(zip(rep.round_val, rep.round_test), start=1):
        for vid in sorted(rv):
            lines.append(_csv_line([t, vid, float(rv[vid]), float(rt[vid])]))
    return "".join(lines)


def summary_table(rep: ExperimentReport) -> str:
    """One row per vehicle: baseline vs selected federated test MAE."""
    lines = [_csv_line(
        ["vehicle", "label", "baseline_test_mae", "selected_round", "selected_test_mae", "improved"]
    )]
    for vid in sorted(rep.client_ids):
        base = float(rep.baseline_test[vid])
        sel = float(rep.selected_test[vid])
        lines.append(_csv_line([
            vid,
            rep.group_labels.get(vid, ""),
            base,
            rep.selected_round[vid],
            sel,
            int(sel < base),
        ]))
    return "".join(lines)


def cross_table(ce: CrossEval) -> str:
    lines = [_csv_line(["model"] + list(ce.ids) + ["row_mean"])]
    for vid, row, mean in zip(ce.ids, ce.matrix, ce.row_means):
        lines.append(_csv_line([vid] + [float(v) for v in row] + [float(mean)]))
    return "".join(lines)


def write_report(rep: ExperimentReport, out_dir: str, write_checkpoints: bool = True) -> dict:
    """Write the run directory; returns {relative path: absolute path}.

    Everything except timing.txt is a pure function of the report content.
    """
    os.makedirs(out_dir, exist_ok=True)
    tables = os.path.join(out_dir, "tables")
    os.makedirs(tables, exist_ok=True)
    written = {}

    def put(rel, text):
        path = os.path.join(out_dir, rel)
        with open(path, "w") as fh:
            fh.write(text)
        written[rel] = path

    put("report.json", render_json(report_to_dict(rep)))
    put(os.path.join("tables", "summary.csv"), summary_table(rep))
    if rep.round_val:
        put(os.path.join("tables", "per_round.csv"), per_round_table(rep))
    put(os.path.join("tables", "cross_baseline.csv"), cross_table(rep.cross_baseline))
    if rep.cross_final is not None:
        put(os.path.join("tables", "cross_final.csv"), cross_table(rep.cross_final))
    put(TIMING_FILE, "".join(
        f"round {t} {sec:.3f}s\n" for t, sec in enumerate(rep.wall_clock_per_round, start=1)
    ))

    if write_checkpoints and rep.final_params and rep.arch is not None:
        ckdir = os.path.join(out_dir, "checkpoints")
        os.makedirs(ckdir, exist_ok=True)
        for vid in sorted(rep.final_params):
            rel = os.path.join("checkpoints", f"{vid}.ffcp")
            save_checkpoint(
                os.path.join(out_dir, rel),
                rep.final_params[vid],
                rep.arch,
                meta={"vehicle": vid, "algorithm": rep.algorithm, "rounds": str(rep.rounds)},
            )
            written[rel] = os.path.join(out_dir, rel)
    return written


def deterministic_bytes(out_dir: str) -> dict:
    """Map of every run file (minus the timing sidecar) to its raw bytes."""
    out = {}
    for root, _, files in os.walk(out_dir):
        for name in sorted(files):
            rel = os.path.relpath(os.path.join(root, name), out_dir)
            if rel == TIMING_FILE:
                continue
            with open(os.path.join(root, name), "rb") as fh:
                out[rel] = fh.read()
    return out
