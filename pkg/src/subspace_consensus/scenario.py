"""Scenario files and trace output.

A scenario is a YAML document::

    n: 4
    d: 2
    rounds: 60
    relay_rounds: 1            # 1 = no relaying, "auto" = (pi^2+6)/6 n + 1
    adversary:
      kind: random_broadcastable   # static | explicit | random_rooted | random_broadcastable | impossibility
      k: 2
      seed: 7
      extra_edge_prob: 0.15
      graphs:                  # static / explicit only: edge lists, self-loops implied
        - [[0, 1], [0, 2], [0, 3]]
    weights:
      kind: equal_neighbor     # equal_neighbor | random_alpha_safe | table
      alpha: 0.1
      seed: 0
      table: [[...], ...]      # n x n, or a list of such matrices used cyclically
    initial:                   # exactly one of points / file / random
      points: [[0, 0], [1, 0], [0, 1], [1, 1]]
      file: x0.csv             # n rows x d columns, relative to the scenario file
      random: {seed: 1, low: -5, high: 5}
    verifiers:
      - lemma7
      - {id: theorem3, eps: 0.01}
    output: out/run1

Processes are numbered from 0.
"""

from __future__ import annotations

import copy
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .adversary import AdversarySpec, default_relay_rounds
from .dynamics import WeightRule
from .graph import make_graph

__all__ = [
    "ConfigError",
    "VerifierSpec",
    "ScenarioConfig",
    "parse_config",
    "load_config",
    "dump_config",
    "read_points_csv",
    "write_trace_csv",
    "read_trace_csv",
]


class ConfigError(ValueError):
    """Malformed scenario; the message starts with the offending field path."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass(frozen=True)
class VerifierSpec:
    id: str
    params: dict = field(default_factory=dict)

    def to_yaml(self):
        return {"id": self.id, **self.params} if self.params else self.id


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    n: int
    d: int
    adversary: AdversarySpec
    rule: WeightRule
    x0: np.ndarray
    rounds: int
    relay_rounds: int
    verifiers: tuple[VerifierSpec, ...]
    output: Path | None
    raw: dict
    base_dir: Path = Path(".")

    def with_seed_offset(self, offset: int) -> "ScenarioConfig":
        """Same scenario with every seed shifted by ``offset``."""
        raw = copy.deepcopy(self.raw)
        for section in ("adversary", "weights"):
            part = raw.setdefault(section, {})
            part["seed"] = int(part.get("seed", 0)) + offset
        init = raw.get("initial", {})
        if "random" in init:
            init["random"]["seed"] = int(init["random"].get("seed", 0)) + offset
        return parse_config(raw, base_dir=self.base_dir)


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
    return mapping[key]


def _positive_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(path, f"expected a positive integer, got {value!r}")
    return value


def _parse_graphs(raw_graphs, n: int, path: str):
    if not isinstance(raw_graphs, list):
        raise ConfigError(path, "expected a list of edge lists")
    graphs = []
    for gi, edges in enumerate(raw_graphs):
        try:
            graphs.append(make_graph(n, [tuple(e) for e in (edges or [])]))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}[{gi}]", str(exc)) from None
    return tuple(graphs)


def _parse_adversary(raw: dict, n: int) -> AdversarySpec:
    path = "adversary"
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a mapping")
    kind = _require(raw, "kind", path)
    graphs = ()
    if "graphs" in raw:
        graphs = _parse_graphs(raw["graphs"], n, f"{path}.graphs")
    try:
        return AdversarySpec(
            n=n,
            kind=kind,
            k=raw.get("k"),
            seed=int(raw.get("seed", 0)),
            graphs=graphs,
            extra_edge_prob=float(raw.get("extra_edge_prob", 0.15)),
        )
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_rule(raw: dict) -> WeightRule:
    path = "weights"
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a mapping")
    try:
        return WeightRule(
            kind=raw.get("kind", "equal_neighbor"),
            alpha=None if raw.get("alpha") is None else float(raw["alpha"]),
            seed=int(raw.get("seed", 0)),
            table=raw.get("table"),
        )
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def read_points_csv(path: Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    try:
        return np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError:
        # tolerate a header row
        return np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)


def _parse_initial(raw: dict, n: int, d: int, base: Path) -> np.ndarray:
    path = "initial"
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a mapping")
    given = [key for key in ("points", "file", "random") if key in raw]
    if len(given) != 1:
        raise ConfigError(path, "give exactly one of 'points', 'file' or 'random'")
    key = given[0]
    if key == "points":
        x = np.asarray(raw["points"], dtype=float)
    elif key == "file":
        fpath = Path(raw["file"])
        if not fpath.is_absolute():
            fpath = base / fpath
        if not fpath.exists():
            raise ConfigError(f"{path}.file", f"initial-vector file not found: {fpath}")
        x = read_points_csv(fpath)
    else:
        spec = raw["random"] or {}
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        x = rng.uniform(float(spec.get("low", 0.0)), float(spec.get("high", 1.0)), size=(n, d))
    if x.ndim == 1 and d == 1:
        x = x[:, None]
    if x.shape != (n, d):
        raise ConfigError(f"{path}.{key}", f"expected {n} x {d} initial vectors, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ConfigError(f"{path}.{key}", "initial vectors must be finite")
    return x


def _parse_verifiers(raw) -> tuple[VerifierSpec, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ConfigError("verifiers", "expected a list")
    out = []
    for i, item in enumerate(raw):
        if isinstance(item, str):
            out.append(VerifierSpec(item))
        elif isinstance(item, dict) and "id" in item:
            params = {k: v for k, v in item.items() if k != "id"}
            out.append(VerifierSpec(str(item["id"]), params))
        elif isinstance(item, dict) and len(item) == 1:
            (vid, params), = item.items()
            out.append(VerifierSpec(str(vid), dict(params or {})))
        else:
            raise ConfigError(f"verifiers[{i}]", f"expected an id or a mapping with 'id', got {item!r}")
    return tuple(out)


def parse_config(raw: dict, base_dir: Path | str = ".") -> ScenarioConfig:
    """Validate a scenario mapping; relative paths resolve against ``base_dir``."""
    base = Path(base_dir)
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "scenario must be a mapping")
    n = _positive_int(_require(raw, "n", ""), "n")
    if n < 2:
        raise ConfigError("n", f"need at least 2 processes, got {n}")
    d = _positive_int(_require(raw, "d", ""), "d")
    rounds = _positive_int(_require(raw, "rounds", ""), "rounds")
    relay = raw.get("relay_rounds", 1)
    relay = default_relay_rounds(n) if relay == "auto" else _positive_int(relay, "relay_rounds")
    adversary = _parse_adversary(_require(raw, "adversary", ""), n)
    rule = _parse_rule(raw.get("weights", {}))
    if rule.alpha is not None and not (0 < rule.alpha <= 1):
        raise ConfigError("weights.alpha", f"alpha must lie in (0, 1], got {rule.alpha}")
    x0 = _parse_initial(_require(raw, "initial", ""), n, d, base)
    verifiers = _parse_verifiers(raw.get("verifiers"))
    output = raw.get("output")
    if output is not None:
        output = Path(output)
        if not output.is_absolute():
            output = base / output
    return ScenarioConfig(n, d, adversary, rule, x0, rounds, relay, verifiers, output, copy.deepcopy(raw), base)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError("<file>", f"scenario file not found: {path}")
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"invalid YAML: {exc}") from None
    return parse_config(raw, base_dir=path.parent)


def dump_config(cfg: ScenarioConfig) -> str:
    """YAML text that parses back to an equivalent scenario."""
    return yaml.safe_dump(cfg.raw, sort_keys=False)


def write_trace_csv(path: Path, states: np.ndarray) -> None:
    """Columns ``t, i, x1 .. xd``; one row per process per state."""
    d = states.shape[2]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "i"] + [f"x{c + 1}" for c in range(d)])
        for t, xs in enumerate(states):
            for i, x in enumerate(xs):
                w.writerow([t, i] + [repr(float(v)) for v in x])


def read_trace_csv(path: Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    t_max = max(int(r[0]) for r in rows)
    n = max(int(r[1]) for r in rows) + 1
    d = len(rows[0]) - 2
    states = np.full((t_max + 1, n, d), math.nan)
    for r in rows:
        states[int(r[0]), int(r[1])] = [float(v) for v in r[2:]]
    return states
