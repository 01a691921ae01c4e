"""Flat key=value experiment configuration.

One file format drives every command: dotted lowercase keys, '#' comments,
types coerced from the defaults below. CLI flags override file values, and
the fully resolved mapping is echoed into each report so a run can be
repeated from its own output.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError

WINDOW_CHOICES = (60, 90, 120, 150, 180)
ARCH_CHOICES = ("ann", "gru", "lstm")
ALGORITHM_CHOICES = ("sgd", "avg", "prox", "per", "rep")
TOPOLOGY_CHOICES = ("centralized", "decentralized")
SOURCE_CHOICES = ("synthetic", "csv")
SELECT_CHOICES = ("final", "best_val")
ANCHOR_CHOICES = ("received", "previous_global")
LOCAL_MODE_CHOICES = ("epochs", "single_step")


@dataclass
class ExperimentConfig:
    seed: int = 42
    out_dir: str = "runs/exp"
    data_source: str = "synthetic"
    data_dir: str = "data/trips"
    data_fleet_size: int = 10
    data_duration: int = 1800
    data_column_map: str = ""
    arch_kind: str = "lstm"
    window: int = 60
    split: str = "8:1:1"
    topology: str = "centralized"
    groups: str = "all"
    algorithm: str = "avg"
    rounds: int = 15
    local_epochs: int = 5
    local_batch: int = 70
    local_lr: float = 1e-3
    local_mode: str = "epochs"
    baseline_epochs: int = 65
    participation: float = 1.0
    prox_mu: float = 0.01
    prox_anchor: str = "previous_global"
    sgd_eta: float = 0.01
    partition_policy: str = "default"
    report_select: str = "final"

    def validate(self):
        checks = [
            ("data.source", self.data_source, SOURCE_CHOICES),
            ("arch.kind", self.arch_kind, ARCH_CHOICES),
            ("topology", self.topology, TOPOLOGY_CHOICES),
            ("algorithm", self.algorithm, ALGORITHM_CHOICES),
            ("report.select", self.report_select, SELECT_CHOICES),
            ("prox.anchor", self.prox_anchor, ANCHOR_CHOICES),
            ("local.mode", self.local_mode, LOCAL_MODE_CHOICES),
        ]
        for key, value, allowed in checks:
            if value not in allowed:
                raise ConfigError(f"{key} must be one of {list(allowed)}, not {value!r}")
        if self.window not in WINDOW_CHOICES:
            raise ConfigError(f"window must be one of {list(WINDOW_CHOICES)}, not {self.window}")
        if self.rounds < 0:
            raise ConfigError("rounds must be >= 0")
        if self.data_fleet_size < 1:
            raise ConfigError("data.fleet_size must be >= 1")
        if self.data_duration < self.window + 10:
            raise ConfigError("data.duration too short for the window length")
        if not 0.0 < self.participation <= 1.0:
            raise ConfigError("participation must lie in (0, 1]")
        if self.local_epochs < 0 or self.baseline_epochs < 0:
            raise ConfigError("epoch counts must be >= 0")
        if self.local_batch < 1:
            raise ConfigError("local.batch must be >= 1")
        if self.prox_mu < 0:
            raise ConfigError("prox.mu must be >= 0")
        parse_split(self.split)
        parse_groups_spec(self.groups)
        if self.data_column_map:
            parse_column_map(self.data_column_map)
        return self


# dotted config key -> (dataclass field, type)
KEYS = {}
for f in fields(ExperimentConfig):
    special = {
        "out_dir": "out.dir",
        "data_fleet_size": "data.fleet_size",
        "data_column_map": "data.column_map",
        "data_duration": "data.duration",
        "data_source": "data.source",
        "data_dir": "data.dir",
        "arch_kind": "arch.kind",
        "local_epochs": "local.epochs",
        "local_batch": "local.batch",
        "local_lr": "local.lr",
        "local_mode": "local.mode",
        "baseline_epochs": "baseline.epochs",
        "prox_mu": "prox.mu",
        "prox_anchor": "prox.anchor",
        "sgd_eta": "sgd.eta",
        "partition_policy": "partition.policy",
        "report_select": "report.select",
    }
    KEYS[special.get(f.name, f.name)] = (f.name, f.type)

_PARSERS = {"int": int, "float": float, "str": str}


def coerce(key: str, raw: str):
    if key not in KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    name, ftype = KEYS[key]
    parser = _PARSERS[ftype if isinstance(ftype, str) else ftype.__name__]
    try:
        return name, parser(raw)
    except ValueError:
        raise ConfigError(f"{key} expects {ftype}, got {raw!r}") from None


def parse_config_text(text: str) -> dict:
    """key=value lines to a {dotted key: raw string} map."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = body.split("=", 1)
        key, raw = key.strip(), raw.strip()
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = raw
    return out


def load_config(path: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """File values, then overrides, on top of the defaults."""
    cfg = ExperimentConfig()
    merged = {}
    if path is not None:
        try:
            with open(path) as fh:
                merged.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    merged.update(overrides or {})
    for key, raw in merged.items():
        name, value = coerce(key, str(raw))
        setattr(cfg, name, value)
    return cfg.validate()


def config_echo(cfg: ExperimentConfig) -> dict:
    """The resolved flat mapping written into report.json."""
    return {key: getattr(cfg, name) for key, (name, _) in sorted(KEYS.items())}


def parse_split(s: str):
    parts = s.split(":")
    if len(parts) != 3:
        raise ConfigError(f"split must look like 8:1:1, got {s!r}")
    try:
        a, b, c = (int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"split needs integer weights, got {s!r}") from None
    if min(a, b, c) < 1:
        raise ConfigError("split weights must be >= 1")
    return a, b, c


def parse_groups_spec(s: str):
    """'all' | 'ids:a,b|c,d' | 'mix:1G+2W' -> a tagged tuple."""
    if s == "all":
        return ("all",)
    if s.startswith("ids:"):
        groups = []
        for chunk in s[len("ids:"):].split("|"):
            members = tuple(m.strip() for m in chunk.split(",") if m.strip())
            if not members:
                raise ConfigError(f"empty group in {s!r}")
            groups.append(members)
        if not groups:
            raise ConfigError(f"no groups in {s!r}")
        return ("ids", tuple(groups))
    if s.startswith("mix:"):
        body = s[len("mix:"):]
        parts = body.split("+")
        if len(parts) != 2 or not parts[0].endswith("G") or not parts[1].endswith("W"):
            raise ConfigError(f"mix spec must look like mix:1G+2W, got {s!r}")
        try:
            n_g, n_w = int(parts[0][:-1]), int(parts[1][:-1])
        except ValueError:
            raise ConfigError(f"mix spec must look like mix:1G+2W, got {s!r}") from None
        if n_g < 0 or n_w < 0 or n_g + n_w < 1:
            raise ConfigError("mix spec needs at least one member")
        return ("mix", n_g, n_w)
    raise ConfigError(f"groups must be all, ids:..., or mix:..., got {s!r}")


def parse_column_map(s: str) -> dict:
    """'time=t,speed=v_mps,...' -> {role: column name}."""
    out = {}
    for pair in s.split(","):
        if "=" not in pair:
            raise ConfigError(f"column map entries look like role=column, got {pair!r}")
        role, col = (p.strip() for p in pair.split("=", 1))
        if not role or not col:
            raise ConfigError(f"bad column map entry {pair!r}")
        if role in out:
            raise ConfigError(f"duplicate role {role!r} in column map")
        out[role] = col
    return out
