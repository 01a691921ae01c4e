"""Multi-round experiment drivers over client arrangements.

A centralized run is one aggregation group containing every vehicle; a
decentralized run is several disjoint peer groups, each averaging only among
its members with no cross-group exchange. Both flow through the same group
engine, so a single all-client group is round-for-round bit-identical to the
centralized server.

Client randomness is keyed by a fingerprint of the client's training data,
not its display id. Relabeling the fleet therefore permutes report rows and
changes nothing else (exactly so under full participation; a participation
draw below 1 is the one id-ordered choice).
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .federated import (
    ClientState,
    RoundPlan,
    fedavg_round,
    fedper_round,
    fedprox_round,
    fedrep_round,
    fedsgd_round,
    make_partition,
)
from .nn import ArchSpec, TrainConfig, evaluate, init_model, train_local
from .seeding import derive_seed, make_rng

REPORT_VERSION = 1


@dataclass(frozen=True)
class FleetSpec:
    vehicles: tuple  # VehicleData per client, one client per vehicle

    def __post_init__(self):
        ids = [v.vehicle_id for v in self.vehicles]
        if len(ids) != len(set(ids)):
            raise ConfigError("duplicate vehicle ids in fleet")
        if not ids:
            raise ConfigError("empty fleet")
        for v in self.vehicles:
            if min(len(v.train.y), len(v.val.y), len(v.test.y)) < 1:
                raise ConfigError(f"vehicle {v.vehicle_id} has an empty split")

    def ids(self):
        return sorted(v.vehicle_id for v in self.vehicles)

    def by_id(self, vid):
        for v in self.vehicles:
            if v.vehicle_id == vid:
                return v
        raise ConfigError(f"no vehicle {vid!r} in fleet")


@dataclass(frozen=True)
class GroupSpec:
    groups: tuple  # tuple of tuples of client ids
    labels: dict = field(default_factory=dict)  # optional id -> "G" / "W"

    def __post_init__(self):
        flat = [vid for g in self.groups for vid in g]
        if len(flat) != len(set(flat)):
            raise ConfigError("groups overlap")
        if any(len(g) < 1 for g in self.groups) or not self.groups:
            raise ConfigError("every group needs at least one member")
        for vid, lab in self.labels.items():
            if lab not in ("G", "W"):
                raise ConfigError(f"label for {vid!r} must be G or W")


@dataclass(frozen=True)
class CrossEval:
    ids: tuple
    matrix: tuple  # row i = model of ids[i] evaluated on each test split
    row_means: tuple


@dataclass
class ExperimentReport:
    version: int
    seed: int
    topology: str
    algorithm: str
    arch_kind: str
    rounds: int
    client_ids: list
    groups: list
    group_labels: dict
    report_select: str
    split_sizes: dict  # id -> [n_train, n_val, n_test]
    baseline_val: dict
    baseline_test: dict
    round_val: list  # one {id: mae} dict per round
    round_test: list
    selected_round: dict
    selected_test: dict
    cross_baseline: CrossEval
    cross_final: CrossEval | None
    config_echo: dict
    wall_clock_per_round: list  # seconds; excluded from deterministic output
    final_params: dict = field(default_factory=dict, repr=False)  # id -> vector
    arch: ArchSpec | None = None


def _fingerprint(data) -> str:
    h = hashlib.sha256()
    h.update(data.train.X.tobytes())
    h.update(data.train.y.tobytes())
    return h.hexdigest()


def client_seed_root(seed: int, data) -> int:
    """Client seed stream keyed by training-data content, not display id."""
    return derive_seed(seed, "client-data", _fingerprint(data))


def cross_evaluate(models: dict, arch: ArchSpec, fleet: FleetSpec) -> CrossEval:
    """MAE matrix: entry (i, j) tests model of client i on client j's test split."""
    ids = tuple(sorted(models))
    if set(ids) - set(fleet.ids()):
        raise ConfigError("models reference clients outside the fleet")
    matrix = []
    for i in ids:
        row = [evaluate(models[i], arch, fleet.by_id(j).test) for j in ids]
        matrix.append(tuple(row))
    means = tuple(float(np.mean(row)) for row in matrix)
    return CrossEval(ids=ids, matrix=tuple(matrix), row_means=means)


def select_performers(local_maes: dict, k: int):
    """Rank clients by local-baseline MAE; best k are G, worst k are W.

    Returns (g_ranked, w_ranked): G best-first, W worst-first, ties broken by
    client id so the choice is deterministic.
    """
    n = len(local_maes)
    if k < 1 or 2 * k > n:
        raise ValueError(f"k={k} must satisfy 1 <= k <= N/2 for N={n}")
    ranked = sorted(local_maes, key=lambda vid: (local_maes[vid], vid))
    return tuple(ranked[:k]), tuple(reversed(ranked[-k:]))


def compose_mixed_group(g_ranked, w_ranked, n_g: int, n_w: int):
    """Take the n_g best good + n_w worst weak performers as one peer group."""
    if n_g > len(g_ranked) or n_w > len(w_ranked):
        raise ValueError("not enough ranked performers for the requested mix")
    return tuple(g_ranked[:n_g]) + tuple(w_ranked[:n_w])


def _effective_plan(plan: RoundPlan) -> RoundPlan:
    # sgd/per/rep activate every client; only avg/prox honor partial participation
    if plan.algorithm in ("sgd", "per", "rep") and plan.participation != 1.0:
        return replace(plan, participation=1.0)
    return plan


def _run_groups(
    fleet: FleetSpec,
    groups: GroupSpec,
    arch: ArchSpec,
    plan: RoundPlan,
    rounds: int,
    seed: int,
    topology: str,
    baseline_cfg: TrainConfig | None,
    report_select: str,
    config_echo: dict | None,
) -> ExperimentReport:
    if rounds < 0:
        raise ConfigError("rounds must be >= 0")
    if report_select not in ("final", "best_val"):
        raise ConfigError(f"report_select must be final or best_val, not {report_select!r}")
    plan = _effective_plan(plan)
    grouped_ids = [vid for g in groups.groups for vid in g]
    missing = set(grouped_ids) - set(fleet.ids())
    if missing:
        raise ConfigError(f"groups reference unknown vehicles {sorted(missing)}")
    split = None
    if plan.algorithm in ("per", "rep"):
        split = make_partition(arch, plan.algorithm, plan.partition_policy)

    w0, _ = init_model(arch, derive_seed(seed, "init"))
    clients = {}
    for vid in sorted(grouped_ids):
        data = fleet.by_id(vid)
        clients[vid] = ClientState(
            client_id=vid,
            data=data,
            params=w0.copy(),
            seed_root=client_seed_root(seed, data),
        )

    # local-only baselines (the rounds=0 reference row)
    baseline_cfg = baseline_cfg or TrainConfig()
    baseline_models = {}
    baseline_val = {}
    baseline_test = {}
    for vid, c in clients.items():
        cfg = replace(baseline_cfg, seed=derive_seed(c.seed_root, "baseline"))
        model = train_local(w0, arch, c.data.train, cfg)
        baseline_models[vid] = model
        baseline_val[vid] = evaluate(model, arch, c.data.val)
        baseline_test[vid] = evaluate(model, arch, c.data.test)

    group_globals = [w0.copy() for _ in groups.groups]
    prev_globals = [None for _ in groups.groups]
    round_val, round_test, wall_clock = [], [], []
    for t in range(1, rounds + 1):
        t0 = time.perf_counter()
        plan_t = replace(plan, round_index=t)
        for g_idx, group in enumerate(groups.groups):
            members = [clients[vid] for vid in sorted(group)]
            part_rng = make_rng(seed, "group", g_idx, "round", t, "participation")
            if plan.algorithm == "sgd":
                new_global = fedsgd_round(group_globals[g_idx], arch, members, plan.eta)
            elif plan.algorithm == "avg":
                new_global = fedavg_round(group_globals[g_idx], arch, members, plan_t, part_rng)
            elif plan.algorithm == "prox":
                new_global = fedprox_round(
                    group_globals[g_idx], arch, members, plan_t, part_rng, prev_globals[g_idx]
                )
            elif plan.algorithm == "per":
                fedper_round(arch, members, split, plan_t)
                new_global = None
            else:
                fedrep_round(arch, members, split, plan_t)
                new_global = None
            if new_global is not None:
                prev_globals[g_idx] = group_globals[g_idx]
                group_globals[g_idx] = new_global
                for m in members:
                    m.params = new_global.copy()
        val_t = {vid: evaluate(c.params, arch, c.data.val) for vid, c in clients.items()}
        test_t = {vid: evaluate(c.params, arch, c.data.test) for vid, c in clients.items()}
        round_val.append(val_t)
        round_test.append(test_t)
        wall_clock.append(time.perf_counter() - t0)

    selected_round, selected_test = {}, {}
    for vid in clients:
        if rounds == 0:
            selected_round[vid] = 0
            selected_test[vid] = baseline_test[vid]
        elif report_select == "final":
            selected_round[vid] = rounds
            selected_test[vid] = round_test[-1][vid]
        else:
            vals = [rv[vid] for rv in round_val]
            best = int(np.argmin(vals))  # argmin takes the earliest tie
            selected_round[vid] = best + 1
            selected_test[vid] = round_test[best][vid]

    cross_baseline = cross_evaluate(baseline_models, arch, fleet)
    cross_final = None
    final_params = {}
    if rounds > 0:
        final_params = {vid: c.params for vid, c in clients.items()}
        cross_final = cross_evaluate(final_params, arch, fleet)

    return ExperimentReport(
        version=REPORT_VERSION,
        seed=seed,
        topology=topology,
        algorithm=plan.algorithm,
        arch_kind=arch.kind,
        rounds=rounds,
        client_ids=sorted(clients),
        groups=[list(g) for g in groups.groups],
        group_labels=dict(groups.labels),
        report_select=report_select,
        split_sizes={
            vid: [len(c.data.train.y), len(c.data.val.y), len(c.data.test.y)]
            for vid, c in clients.items()
        },
        baseline_val=baseline_val,
        baseline_test=baseline_test,
        round_val=round_val,
        round_test=round_test,
        selected_round=selected_round,
        selected_test=selected_test,
        cross_baseline=cross_baseline,
        cross_final=cross_final,
        config_echo=dict(config_echo or {}),
        wall_clock_per_round=wall_clock,
        final_params=final_params,
        arch=arch,
    )


def run_centralized(
    fleet: FleetSpec,
    arch: ArchSpec,
    plan: RoundPlan,
    rounds: int,
    seed: int = 42,
    baseline_cfg: TrainConfig | None = None,
    report_select: str = "final",
    config_echo: dict | None = None,
) -> ExperimentReport:
    """All vehicles coordinate through one server (a single aggregation group)."""
    groups = GroupSpec(groups=(tuple(fleet.ids()),))
    return _run_groups(
        fleet, groups, arch, plan, rounds, seed, "centralized",
        baseline_cfg, report_select, config_echo,
    )


def run_decentralized(
    fleet: FleetSpec,
    groups: GroupSpec,
    arch: ArchSpec,
    plan: RoundPlan,
    rounds: int,
    seed: int = 42,
    baseline_cfg: TrainConfig | None = None,
    report_select: str = "final",
    config_echo: dict | None = None,
) -> ExperimentReport:
    """Disjoint peer groups, each averaging internally; no server, no cross-talk."""
    return _run_groups(
        fleet, groups, arch, plan, rounds, seed, "decentralized",
        baseline_cfg, report_select, config_echo,
    )
