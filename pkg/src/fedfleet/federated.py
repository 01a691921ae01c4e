"""Federated optimization on flat parameter vectors.

Five client-coordination rules over the same primitives: sample-weighted
vector averaging, local Adam phases, an optional proximal pull, and a
shared/personal segment split for the personalized pair. Only parameter
vectors, gradients, and sample counts ever cross a client boundary.

Seed discipline: every stochastic choice derives from named paths that never
mention the algorithm, so analytically equivalent settings (prox with mu=0
vs avg, empty personal set vs avg, one all-client group vs a central server)
replay identical randomness and produce bit-identical rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PartitionError
from .nn import ArchSpec, TrainConfig, build_partition, full_batch_gradient, train_local
from .seeding import derive_seed

ALGORITHMS = ("sgd", "avg", "prox", "per", "rep")


@dataclass
class ClientState:
    """One vehicle's training context as the coordination layer sees it."""

    client_id: str
    data: object  # VehicleData-like: .train/.val/.test WindowedDatasets
    params: np.ndarray
    seed_root: int
    personal_names: tuple = ()

    @property
    def n_train(self) -> int:
        return len(self.data.train.y)


@dataclass(frozen=True)
class RoundPlan:
    algorithm: str = "avg"
    eta: float = 0.01  # server rate (sgd) / step size of the single-step mode
    epochs: int = 5
    batch: int = 70
    participation: float = 1.0
    mu: float = 0.0
    anchor_mode: str = "previous_global"
    partition_policy: str = "default"
    local_mode: str = "epochs"  # per/rep local phase: "epochs" or "single_step"
    lr: float = 1e-3
    round_index: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if not 0.0 < self.participation <= 1.0:
            raise ValueError("participation must lie in (0,1]")
        if self.mu < 0.0:
            raise ValueError("mu must be >= 0")
        if self.anchor_mode not in ("received", "previous_global"):
            raise ValueError(f"unknown anchor mode {self.anchor_mode!r}")
        if self.local_mode not in ("epochs", "single_step"):
            raise ValueError(f"unknown local mode {self.local_mode!r}")
        if self.epochs < 0 or self.batch < 1:
            raise ValueError("epochs must be >= 0 and batch >= 1")


@dataclass(frozen=True)
class SharedPersonalSplit:
    shared: tuple
    personal: tuple


def aggregation_weights(counts) -> np.ndarray:
    total = sum(counts)
    if total <= 0:
        raise ValueError("sample counts must be positive")
    return np.array([n / total for n in counts])


def weighted_average(entries) -> np.ndarray:
    """Convex combination of (vector, n_v) entries with weights n_v / n.

    Computed in anchored form out = base + sum w_v * (vec_v - base) over a
    canonical entry ordering, which makes the result bit-identical under any
    permutation of the entries and returns identical inputs unchanged.
    """
    entries = list(entries)
    if not entries:
        raise ValueError("nothing to average")
    length = len(entries[0][0])
    for vec, n in entries:
        if len(vec) != length:
            raise PartitionError("entries disagree on parameter layout")
        if n < 1:
            raise ValueError("sample counts must be >= 1")
    order = sorted(range(len(entries)), key=lambda i: (entries[i][1], entries[i][0].tobytes()))
    total = sum(n for _, n in entries)
    base = entries[order[0]][0]
    out = base.astype(float, copy=True)
    for i in order[1:]:
        vec, n = entries[i]
        out += (n / total) * (vec - base)
    return out


def select_participants(clients, fraction: float, rng) -> list:
    """ceil(fraction * |V|) clients without replacement; deterministic per rng."""
    ordered = sorted(clients, key=lambda c: c.client_id)
    k = math.ceil(fraction * len(ordered))
    if k < 1:
        raise ValueError("participation selects no client")
    if k >= len(ordered):
        return ordered
    picked = rng.choice(len(ordered), size=k, replace=False)
    return [ordered[i] for i in sorted(picked)]


def _local_cfg(plan: RoundPlan, client: ClientState) -> TrainConfig:
    # path deliberately algorithm-free; see module docstring
    seed = derive_seed(client.seed_root, "round", plan.round_index, "local")
    return TrainConfig(batch=plan.batch, epochs=plan.epochs, seed=seed, lr=plan.lr)


def fedsgd_round(w, arch: ArchSpec, clients, eta: float, grad_fn=None):
    """One synchronous gradient round: w' = w - eta * weighted mean gradient.

    Every client participates and contributes its deterministic full-batch
    gradient at w (dropout off). grad_fn(w, client) can substitute another
    gradient oracle for verification.
    """
    ordered = sorted(clients, key=lambda c: c.client_id)
    if not ordered:
        raise ValueError("empty client set")
    if grad_fn is None:
        grad_fn = lambda wv, c: full_batch_gradient(wv, arch, c.data.train)
    entries = [(grad_fn(w, c), c.n_train) for c in ordered]
    return w - eta * weighted_average(entries)


def fedavg_round(w, arch: ArchSpec, clients, plan: RoundPlan, part_rng):
    """Local E-epoch phases from the broadcast weights, then weight averaging."""
    participants = select_participants(clients, plan.participation, part_rng)
    entries = []
    for c in participants:
        wv = train_local(w, arch, c.data.train, _local_cfg(plan, c))
        entries.append((wv, c.n_train))
    return weighted_average(entries)


def fedprox_local(w_received, anchor, mu: float, arch: ArchSpec, ds, cfg: TrainConfig):
    """Local phase where every batch gradient gains mu * (w - anchor)."""
    return train_local(w_received, arch, ds, cfg, prox_anchor=anchor, prox_mu=mu)


def fedprox_round(w, arch: ArchSpec, clients, plan: RoundPlan, part_rng, prev_global=None):
    """FedAvg with a proximal pull toward a fixed anchor.

    anchor_mode "received" ties clients to this round's broadcast weights;
    "previous_global" ties them to the broadcast of the round before (the
    initial weights when there is none).
    """
    if plan.anchor_mode == "received" or prev_global is None:
        anchor = w
    else:
        anchor = prev_global
    participants = select_participants(clients, plan.participation, part_rng)
    entries = []
    for c in participants:
        wv = fedprox_local(w, anchor, plan.mu, arch, c.data.train, _local_cfg(plan, c))
        entries.append((wv, c.n_train))
    return weighted_average(entries)


def make_partition(arch: ArchSpec, algorithm: str, policy: str = "default") -> SharedPersonalSplit:
    """Resolve the shared/personal segment split for per or rep.

    Default policy personalizes exactly one recurrent (or dense) layer: the
    top one for per (aggregation keeps the base layers), the bottom one for
    rep (aggregation keeps the head side). "none" shares everything;
    "personal:prefix[,prefix...]" picks layers by name.
    """
    if algorithm not in ("per", "rep"):
        raise PartitionError(f"partitioning applies to per/rep, not {algorithm!r}")
    part = build_partition(arch)
    names = part.names()
    prefixes = sorted({n.split(".")[0] for n in names})
    if policy == "default":
        layer = len(arch.hidden) if algorithm == "per" else 1
        chosen = {f"{arch.layer_prefix}{layer}"}
    elif policy == "none":
        chosen = set()
    elif policy.startswith("personal:"):
        chosen = {p.strip() for p in policy[len("personal:"):].split(",") if p.strip()}
        unknown = chosen - set(prefixes)
        if unknown:
            raise PartitionError(f"unknown layer prefixes {sorted(unknown)}; have {prefixes}")
    else:
        raise PartitionError(f"unknown partition policy {policy!r}")
    personal = tuple(n for n in names if n.split(".")[0] in chosen)
    shared = tuple(n for n in names if n.split(".")[0] not in chosen)
    if not shared:
        raise PartitionError("personal set swallowed every segment; nothing to aggregate")
    return SharedPersonalSplit(shared=shared, personal=personal)


def extract_segments(vec, part, names) -> np.ndarray:
    """Concatenate named segments (partition order) into one flat array."""
    ordered = [s for s in part.segments if s.name in set(names)]
    return np.concatenate([vec[s.offset : s.offset + s.size] for s in ordered])


def scatter_segments(vec, part, names, values) -> None:
    """Inverse of extract_segments; writes into vec in place."""
    ordered = [s for s in part.segments if s.name in set(names)]
    at = 0
    for s in ordered:
        vec[s.offset : s.offset + s.size] = values[at : at + s.size]
        at += s.size


def _personalized_round(arch: ArchSpec, clients, split: SharedPersonalSplit, plan: RoundPlan):
    """Joint local update of both sets, then server averaging of shared only.

    Personal segments never leave their client: the aggregation input is the
    extracted shared sub-vector, and the write-back touches shared slices
    only. Mutates each client's params; returns the averaged shared values.
    """
    part = build_partition(arch)
    if set(split.shared) | set(split.personal) != set(part.names()):
        raise PartitionError("split does not cover the architecture's segments")
    ordered = sorted(clients, key=lambda c: c.client_id)
    updated = []
    for c in ordered:
        if plan.local_mode == "single_step":
            g = full_batch_gradient(c.params, arch, c.data.train)
            wv = c.params - plan.eta * g
        else:
            wv = train_local(c.params, arch, c.data.train, _local_cfg(plan, c))
        updated.append(wv)
    shared_avg = weighted_average(
        [(extract_segments(wv, part, split.shared), c.n_train) for wv, c in zip(updated, ordered)]
    )
    for wv, c in zip(updated, ordered):
        merged = wv.copy()
        scatter_segments(merged, part, split.shared, shared_avg)
        c.params = merged
        c.personal_names = split.personal
    return shared_avg


def fedper_round(arch, clients, split, plan):
    """Personalized round where clients keep their own top layer."""
    return _personalized_round(arch, clients, split, plan)


def fedrep_round(arch, clients, split, plan):
    """Personalized round where clients keep their own bottom layer."""
    return _personalized_round(arch, clients, split, plan)
