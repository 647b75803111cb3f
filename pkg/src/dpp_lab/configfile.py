"""Plain-text key/value run configuration.

Format: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines ignored.  Dots in keys build a tree (``batch.num_paths``).  Unknown
keys are rejected with the offending line number; silent misconfiguration
would invalidate verification claims.

Inline problem instances spell out every event and action::

    problem.L = 1
    problem.z_max = 1.0
    problem.B = 1.0
    problem.V = 10.0
    problem.events.0.probability = 0.5
    problem.events.0.actions.0 = 0.0, 1.0    # z0, z_1..z_L
    problem.events.0.actions.1 = 1.0, 0.0

Builtin instances are named instead: ``problem = server-scheduling-3x2``
with a top-level ``V``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import ActionVector, EventOutcome, ProblemSpec, TieBreak
from .events import BUILTIN_SPECS, builtin_spec
from .montecarlo import ALL_CHECKS


class ConfigError(Exception):
    """Bad run configuration; message carries the line number when known."""


_SIMPLE_KEYS = {
    "problem", "V", "T", "seed", "output",
    "problem.L", "problem.z_max", "problem.B", "problem.V", "problem.tie_break",
    "batch.num_paths", "batch.T", "batch.epsilon", "batch.delta",
    "batch.checks", "batch.queue_tail_levels",
    "sweep.V_list", "sweep.checkpoints",
}
_EVENT_PROB = re.compile(r"^problem\.events\.(\d+)\.probability$")
_EVENT_ACTION = re.compile(r"^problem\.events\.(\d+)\.actions\.(\d+)$")


@dataclass
class RunConfig:
    """Parsed configuration; see module docstring for the key reference."""

    problem_name: str | None = None
    inline: dict = field(default_factory=dict)
    V: float | None = None
    T: int = 10_000
    seed: int = 0
    output: str = "out"
    num_paths: int = 1000
    batch_T: int | None = None
    epsilon: float = 0.1
    delta: float = 0.05
    checks: tuple[str, ...] | None = None
    queue_tail_levels: tuple[float, ...] | None = None
    sweep_v: tuple[float, ...] = (1.0, 10.0, 100.0)
    sweep_checkpoints: int = 24

    def build_spec(self) -> ProblemSpec:
        if self.problem_name is not None:
            if self.V is None:
                raise ConfigError("builtin problems need a top-level V")
            if self.problem_name not in BUILTIN_SPECS:
                raise ConfigError(f"unknown builtin problem {self.problem_name!r}; "
                                  f"choices: {sorted(BUILTIN_SPECS)}")
            return builtin_spec(self.problem_name, V=self.V)
        if not self.inline:
            raise ConfigError("no problem given; set `problem` or the problem.* tree")
        return self._build_inline()

    def _build_inline(self) -> ProblemSpec:
        d = self.inline
        try:
            L = int(d["L"])
            z_max = float(d["z_max"])
            B = float(d["B"])
        except KeyError as e:
            raise ConfigError(f"inline problem is missing problem.{e.args[0]}") from None
        V = self.V if self.V is not None else d.get("V")
        if V is None:
            raise ConfigError("inline problem needs problem.V or a top-level V")
        tie = d.get("tie_break", "LowestIndex")
        if tie != "LowestIndex":
            raise ConfigError(f"unknown tie_break {tie!r}")
        ev_tree = d.get("events", {})
        if not ev_tree:
            raise ConfigError("inline problem has no events")
        events = []
        for eid in sorted(ev_tree):
            node = ev_tree[eid]
            if "probability" not in node:
                raise ConfigError(f"problem.events.{eid} has no probability")
            acts = node.get("actions", {})
            if not acts:
                raise ConfigError(f"problem.events.{eid} has no actions")
            actions = []
            for k in sorted(acts):
                row = acts[k]
                if len(row) != L + 1:
                    raise ConfigError(
                        f"problem.events.{eid}.actions.{k} needs {L + 1} values, got {len(row)}")
                actions.append(ActionVector(row[0], tuple(row[1:])))
            events.append(EventOutcome(id=eid, probability=node["probability"],
                                       actions=tuple(actions)))
        try:
            return ProblemSpec(events=tuple(events), L=L, z_max=z_max, B=B,
                               V=float(V), tie_break=TieBreak.LOWEST_INDEX)
        except ValueError as e:
            raise ConfigError(f"inline problem rejected: {e}") from None


def _parse_scalar(line_no: int, key: str, raw: str):
    raw = raw.strip()
    if not raw:
        raise ConfigError(f"line {line_no}: empty value for {key}")
    return raw


def _as_int(line_no: int, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"line {line_no}: {key} needs an integer, got {raw!r}") from None


def _as_float(line_no: int, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"line {line_no}: {key} needs a number, got {raw!r}") from None


def _as_float_list(line_no: int, key: str, raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in raw.split(","))
    except ValueError:
        raise ConfigError(f"line {line_no}: {key} needs comma-separated numbers") from None


def parse_config_text(text: str) -> RunConfig:
    cfg = RunConfig()
    seen: dict[str, int] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {line_no}: expected `key = value`, got {line!r}")
        key, raw = body.split("=", 1)
        key = key.strip()
        raw = _parse_scalar(line_no, key, raw)
        if key in seen:
            raise ConfigError(f"line {line_no}: duplicate key {key} (first on line {seen[key]})")
        seen[key] = line_no

        m = _EVENT_PROB.match(key)
        if m:
            eid = int(m.group(1))
            cfg.inline.setdefault("events", {}).setdefault(eid, {})["probability"] = \
                _as_float(line_no, key, raw)
            continue
        m = _EVENT_ACTION.match(key)
        if m:
            eid, k = int(m.group(1)), int(m.group(2))
            cfg.inline.setdefault("events", {}).setdefault(eid, {}) \
                .setdefault("actions", {})[k] = list(_as_float_list(line_no, key, raw))
            continue
        if key not in _SIMPLE_KEYS:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")

        if key == "problem":
            cfg.problem_name = raw
        elif key == "V":
            cfg.V = _as_float(line_no, key, raw)
            if cfg.V <= 0:
                raise ConfigError(f"line {line_no}: V must be positive")
        elif key == "T":
            cfg.T = _as_int(line_no, key, raw)
            if cfg.T < 1:
                raise ConfigError(f"line {line_no}: T must be at least 1")
        elif key == "seed":
            cfg.seed = _as_int(line_no, key, raw)
            if not 0 <= cfg.seed < (1 << 64):
                raise ConfigError(f"line {line_no}: seed must fit in 64 unsigned bits")
        elif key == "output":
            cfg.output = raw
        elif key == "problem.L":
            cfg.inline["L"] = _as_int(line_no, key, raw)
        elif key == "problem.z_max":
            cfg.inline["z_max"] = _as_float(line_no, key, raw)
        elif key == "problem.B":
            cfg.inline["B"] = _as_float(line_no, key, raw)
        elif key == "problem.V":
            cfg.inline["V"] = _as_float(line_no, key, raw)
        elif key == "problem.tie_break":
            cfg.inline["tie_break"] = raw
        elif key == "batch.num_paths":
            cfg.num_paths = _as_int(line_no, key, raw)
            if cfg.num_paths < 1:
                raise ConfigError(f"line {line_no}: batch.num_paths must be at least 1")
        elif key == "batch.T":
            cfg.batch_T = _as_int(line_no, key, raw)
            if cfg.batch_T < 1:
                raise ConfigError(f"line {line_no}: batch.T must be at least 1")
        elif key == "batch.epsilon":
            cfg.epsilon = _as_float(line_no, key, raw)
            if cfg.epsilon <= 0:
                raise ConfigError(f"line {line_no}: batch.epsilon must be positive")
        elif key == "batch.delta":
            cfg.delta = _as_float(line_no, key, raw)
            if not 0 < cfg.delta < 1:
                raise ConfigError(f"line {line_no}: batch.delta must lie in (0, 1)")
        elif key == "batch.checks":
            names = tuple(tok.strip() for tok in raw.split(",") if tok.strip())
            for name in names:
                if name not in ALL_CHECKS:
                    raise ConfigError(f"line {line_no}: unknown check {name!r}; "
                                      f"choices: {ALL_CHECKS}")
            cfg.checks = names
        elif key == "batch.queue_tail_levels":
            cfg.queue_tail_levels = _as_float_list(line_no, key, raw)
        elif key == "sweep.V_list":
            cfg.sweep_v = _as_float_list(line_no, key, raw)
            if not cfg.sweep_v:
                raise ConfigError(f"line {line_no}: sweep.V_list must be nonempty")
        elif key == "sweep.checkpoints":
            cfg.sweep_checkpoints = _as_int(line_no, key, raw)
            if cfg.sweep_checkpoints < 1:
                raise ConfigError(f"line {line_no}: sweep.checkpoints must be at least 1")
    if cfg.problem_name is not None and cfg.inline:
        raise ConfigError("give either a builtin `problem` or an inline problem.* tree, not both")
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return parse_config_text(f.read())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
