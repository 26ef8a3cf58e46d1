"""Scenario configuration: a sectioned ``key = value`` text format.

Sections ``[mobility]``, ``[time]`` and ``[beam]`` carry the emulation input
parameters under their original names.  ``[faults]`` holds per-packet-kind drop
probabilities and failure injection, ``[flags]`` everything else.  Lines starting
with ``#`` or ``;`` are comments.  Errors always name the offending line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable

from .core import PacketKind

REQUIRED_SECTIONS = ("mobility", "time", "beam")
REQUIRED_KEYS = ("NumES", "NumRN", "EndTime")
COLLISION_MODELS = ("aloha", "none")


class ConfigError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class _Key:
    section: str
    name: str
    attr: str
    kind: Callable[[str], Any]
    check: Callable[[Any], bool] = lambda v: True
    rule: str = ""


def _nonneg(v):
    return v >= 0


def _pos(v):
    return v > 0


def _prob(v):
    return 0.0 <= v <= 1.0


SCHEMA: tuple[_Key, ...] = (
    _Key("mobility", "NumRN", "num_rn", int, _nonneg, ">= 0"),
    _Key("mobility", "NumES", "num_es", int, lambda v: 1 <= v <= 64, "in 1..64"),
    _Key("mobility", "ESDist", "es_dist", float, _pos, "> 0"),
    _Key("mobility", "T", "mycall_timer", float, _pos, "> 0"),
    _Key("mobility", "maxV", "max_speed", float, _nonneg, ">= 0"),
    _Key("mobility", "S", "startup_stagger", float, _nonneg, ">= 0"),
    _Key("mobility", "ESspd", "es_speed", float, _nonneg, ">= 0"),
    _Key("mobility", "ESdir", "es_dir", float, lambda v: 0 <= v < 360, "in [0, 360)"),
    _Key("mobility", "RNspd", "rn_speed", float, _nonneg, ">= 0"),
    _Key("mobility", "RNdir", "rn_dir", float, lambda v: 0 <= v < 360, "in [0, 360)"),
    _Key("time", "EndTime", "end_time", int, _pos, "> 0 (tenths of seconds)"),
    _Key("time", "VCCallTime", "vc_call_time", float, _pos, "> 0"),
    _Key("time", "VCCallDuration", "vc_call_duration", float, _pos, "> 0"),
    _Key("beam", "UseRealTopology", "use_real_topology", _bool),
    _Key("beam", "Rlink", "rlink", float, _pos, "> 0"),
    _Key("beam", "Fmax", "fmax", int, lambda v: v >= 1, ">= 1"),
    _Key("beam", "Imult", "imult", float, _nonneg, ">= 0"),
    _Key("beam", "Twidth", "twidth", float, lambda v: 0 < v <= 360, "in (0, 360]"),
    _Key("beam", "Rwidth", "rwidth", float, lambda v: 0 < v <= 360, "in (0, 360]"),
    _Key("beam", "MaxBeams", "max_beams", int, lambda v: v >= 1, ">= 1"),
    _Key("beam", "SlotsPerBeam", "slots_per_beam", int, lambda v: v >= 1, ">= 1"),
    _Key("faults", "FailMasterAt", "fail_master_at", float, lambda v: v == -1 or v >= 0, ">= 0 or -1"),
    *(
        _Key("faults", f"drop_{k.name}", f"drop_{k.name.lower()}", float, _prob, "in [0, 1]")
        for k in PacketKind
    ),
    _Key("flags", "seed", "seed", int, _nonneg, ">= 0"),
    _Key("flags", "vnc_enabled", "vnc_enabled", _bool),
    _Key("flags", "fixes_enabled", "fixes_enabled", _bool),
    _Key("flags", "collision_model", "collision_model", str, lambda v: v in COLLISION_MODELS,
         f"one of {COLLISION_MODELS}"),
    _Key("flags", "tolerance", "tolerance", float, _nonneg, ">= 0 (meters)"),
    _Key("flags", "ktop", "k_top", float, _nonneg, ">= 0"),
    _Key("flags", "rn_retry", "rn_retry", float, _pos, "> 0"),
    _Key("flags", "rn_update", "rn_update", float, _pos, "> 0"),
    _Key("flags", "gps_poll", "gps_poll", float, _pos, "> 0"),
    _Key("flags", "beamform_delay", "beamform_delay", float, _nonneg, ">= 0"),
    _Key("flags", "jitter", "jitter", float, _nonneg, ">= 0"),
    _Key("flags", "gvt_interval", "gvt_interval", float, _pos, "> 0"),
    _Key("flags", "lookahead", "lookahead", float, _nonneg, ">= 0"),
    _Key("flags", "vnc_contend", "vnc_contend", _bool),
    _Key("flags", "rn_start", "rn_start", float, _nonneg, ">= 0"),
)
_BY_NAME = {(k.section, k.name): k for k in SCHEMA}
SECTIONS = ("mobility", "time", "beam", "faults", "flags")


@dataclass(frozen=True)
class ScenarioConfig:
    # [mobility]
    num_rn: int = 0
    num_es: int = 2
    es_dist: float = 20.0
    mycall_timer: float = 20.0
    max_speed: float = 5.0
    startup_stagger: float = 1.0
    es_speed: float = 0.0
    es_dir: float = 0.0
    rn_speed: float = 0.0
    rn_dir: float = 0.0
    # [time]
    end_time: int = 3000
    vc_call_time: float = 1200.0
    vc_call_duration: float = 600.0
    # [beam]
    use_real_topology: bool = True
    rlink: float = 1000.0
    fmax: int = 3
    imult: float = 1.0
    twidth: float = 10.0
    rwidth: float = 10.0
    max_beams: int = 4
    slots_per_beam: int = 4
    # [faults]
    fail_master_at: float = -1.0
    drop_mycall: float = 0.0
    drop_newswitch: float = 0.0
    drop_switchpos: float = 0.0
    drop_topology: float = 0.0
    drop_user_pos: float = 0.0
    drop_handoff: float = 0.0
    drop_gvt_update: float = 0.0
    # [flags]
    seed: int = 1
    vnc_enabled: bool = False
    fixes_enabled: bool = False
    collision_model: str = "aloha"
    tolerance: float = 0.0
    k_top: float = 1e-7
    rn_retry: float = 3.0
    rn_update: float = 2.0
    gps_poll: float = 1.0
    beamform_delay: float = 0.0
    jitter: float = 0.5
    gvt_interval: float = 1.0
    lookahead: float = 10.0
    vnc_contend: bool = True
    rn_start: float = 0.0

    def __post_init__(self):
        for k in SCHEMA:
            v = getattr(self, k.attr)
            if isinstance(v, float) and not math.isfinite(v):
                raise ConfigError(f"{k.name} must be finite")
            if not k.check(v):
                raise ConfigError(f"{k.name} = {v!r} must be {k.rule}")

    @property
    def end_time_ms(self) -> int:
        return self.end_time * 100

    def drop_map(self) -> dict[PacketKind, float]:
        out = {}
        for k in PacketKind:
            p = getattr(self, f"drop_{k.name.lower()}")
            if p > 0:
                out[k] = p
        return out

    def with_(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


def parse_config(text: str) -> ScenarioConfig:
    values: dict[str, Any] = {}
    seen_sections: set[str] = set()
    seen_keys: dict[str, int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith(";"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            seen_sections.add(section)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if section is None:
            raise ConfigError("key outside of any section", lineno)
        name, value = (t.strip() for t in line.split("=", 1))
        key = _BY_NAME.get((section, name))
        if key is None:
            raise ConfigError(f"unknown key {name!r} in [{section}]", lineno)
        if name in seen_keys:
            raise ConfigError(f"duplicate key {name!r} (first on line {seen_keys[name]})", lineno)
        seen_keys[name] = lineno
        try:
            v = key.kind(value)
        except ValueError:
            raise ConfigError(f"{name}: cannot parse {value!r} as {key.kind.__name__}", lineno) from None
        if isinstance(v, float) and not math.isfinite(v):
            raise ConfigError(f"{name} must be finite", lineno)
        if not key.check(v):
            raise ConfigError(f"{name} = {value} must be {key.rule}", lineno)
        values[key.attr] = v
    missing_sec = [s for s in REQUIRED_SECTIONS if s not in seen_sections]
    missing_keys = [k for k in REQUIRED_KEYS if k not in seen_keys]
    if missing_sec or missing_keys:
        parts = []
        if missing_sec:
            parts.append("missing sections: " + ", ".join(f"[{s}]" for s in missing_sec))
        if missing_keys:
            parts.append("missing required keys: " + ", ".join(missing_keys))
        last = len(text.splitlines()) or 1
        raise ConfigError("; ".join(parts), last)
    return ScenarioConfig(**values)


def load_config(path: str | Path) -> ScenarioConfig:
    return parse_config(Path(path).read_text())


def serialize_config(cfg: ScenarioConfig) -> str:
    out = []
    for sec in SECTIONS:
        out.append(f"[{sec}]")
        for k in SCHEMA:
            if k.section == sec:
                out.append(f"{k.name} = {_fmt(getattr(cfg, k.attr))}")
        out.append("")
    return "\n".join(out)


def config_fields() -> list[str]:
    return [f.name for f in fields(ScenarioConfig)]
