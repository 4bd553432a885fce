"""Scenario files: a JSON object with a ``schema_version`` field.

Unknown keys are rejected so typos never silently fall back to defaults.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, fields
from pathlib import Path

from .sim import AgentConfig, ScenarioConfig

SCHEMA_VERSION = 1
SCENARIO_DIR = Path(__file__).parent / "scenarios"

_TOP_KEYS = {f.name for f in fields(ScenarioConfig)} | {"schema_version"}
_AGENT_KEYS = {f.name for f in fields(AgentConfig)}
_NUMERIC = {"gamma", "delta", "sigma1", "sigma2", "dt", "t_final", "margin"}
_STRINGS = {"mode", "condition", "udot_estimate", "name", "notes"}


class ConfigError(ValueError):
    """Scenario file could not be parsed or failed validation."""


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _point(value, where):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{where}: expected a pair [x, y], got {value!r}")
    return (_number(value[0], f"{where}[0]"), _number(value[1], f"{where}[1]"))


def config_from_dict(data: dict, source: str = "<config>") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be an object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown key(s) {sorted(unknown)}")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"{source}: schema_version must be {SCHEMA_VERSION}, got {version!r}")
    if "agents" not in data or not isinstance(data["agents"], list):
        raise ConfigError(f"{source}: 'agents' must be a list")

    agents = []
    for k, a in enumerate(data["agents"]):
        where = f"{source}: agents[{k}]"
        if not isinstance(a, dict):
            raise ConfigError(f"{where}: expected an object")
        unknown = set(a) - _AGENT_KEYS
        if unknown:
            raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
        for key in ("start", "goal"):
            if key not in a:
                raise ConfigError(f"{where}: missing '{key}'")
        kw = {"start": _point(a["start"], f"{where}.start"), "goal": _point(a["goal"], f"{where}.goal")}
        for key in ("weight", "u_max"):
            if key in a:
                kw[key] = _number(a[key], f"{where}.{key}")
        for key in ("label", "color"):
            if key in a:
                if not isinstance(a[key], str):
                    raise ConfigError(f"{where}.{key}: expected a string")
                kw[key] = a[key]
        agents.append(AgentConfig(**kw))

    kw = {"agents": agents}
    for key in _NUMERIC & set(data):
        kw[key] = _number(data[key], f"{source}: {key}")
    for key in _STRINGS & set(data):
        if not isinstance(data[key], str):
            raise ConfigError(f"{source}: {key}: expected a string")
        kw[key] = data[key]
    try:
        return ScenarioConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def shipped_scenarios() -> dict[str, Path]:
    return {p.stem: p for p in sorted(SCENARIO_DIR.glob("*.json"))}


def resolve_config_path(arg) -> Path:
    """A file path, or the bare name of a shipped scenario."""
    path = Path(arg)
    if path.exists():
        return path
    return shipped_scenarios().get(str(arg), path)


def parse_config(path) -> ScenarioConfig:
    path = resolve_config_path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return config_from_dict(data, str(path))


def config_to_dict(config: ScenarioConfig) -> dict:
    d = asdict(config)
    d["agents"] = [
        {k: (list(v) if isinstance(v, tuple) else v) for k, v in a.items() if v is not None}
        for a in d["agents"]
    ]
    d["schema_version"] = SCHEMA_VERSION
    return d


def canonical_json(config: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))


def config_hash(config: ScenarioConfig) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()
