"""Engine-wide configuration and the control messages that mutate it.

The on-disk format is flat ``key = value`` text with dotted keys, one
assignment per line::

    blink.ear_threshold = 0.21
    engine.detector = threshold

Blank lines and ``#`` comments are allowed.  Every key names exactly one
field of one nested config dataclass, so a parsed file and a live SET
message go through the same validation path.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from typing import Any, Mapping

from .blink import BlinkConfig
from .errors import ConfigError, InvalidParameterError
from .events import EventConfig
from .gaze import GazeConfig
from .pupil import HoughConfig, PupilConfig

__all__ = [
    "Detector",
    "EngineConfig",
    "ControlMessage",
    "ControlOp",
    "config_keys",
    "config_values",
    "set_value",
    "parse_config_text",
    "format_config",
    "parse_control",
    "apply_control",
]


class Detector(enum.Enum):
    THRESHOLD = "threshold"
    HOUGH = "hough"


_SECTION_TYPES: dict[str, type] = {
    "blink": BlinkConfig,
    "pupil": PupilConfig,
    "hough": HoughConfig,
    "gaze": GazeConfig,
    "events": EventConfig,
}

# Engine-level knobs live under an explicit "engine." prefix so that every
# key in the file format is dotted the same way.
_ENGINE_FIELDS = ("detector", "smoothing_enabled", "eye_margin", "telemetry_port")


@dataclass(frozen=True)
class EngineConfig:
    """Everything the per-frame pipeline needs, in one immutable bundle."""

    blink: BlinkConfig = BlinkConfig()
    pupil: PupilConfig = PupilConfig()
    hough: HoughConfig = HoughConfig()
    gaze: GazeConfig = GazeConfig()
    events: EventConfig = EventConfig()
    detector: Detector = Detector.THRESHOLD
    # Off by default: the raw detector chain is the behavior of record and
    # smoothing is an opt-in layer on top of it.
    smoothing_enabled: bool = False
    eye_margin: int = 6
    telemetry_port: int | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.detector, Detector):
            raise InvalidParameterError(f"detector must be a Detector, got {self.detector!r}")
        if not isinstance(self.eye_margin, int) or self.eye_margin < 0:
            raise InvalidParameterError(f"eye_margin must be an int >= 0, got {self.eye_margin!r}")
        if self.telemetry_port is not None and not (
            isinstance(self.telemetry_port, int) and 1 <= self.telemetry_port <= 65535
        ):
            raise InvalidParameterError(
                f"telemetry_port must be None or in 1..65535, got {self.telemetry_port!r}"
            )


def config_keys() -> tuple[str, ...]:
    """All recognized dotted keys, in stable file order."""
    keys: list[str] = []
    for section, cls in _SECTION_TYPES.items():
        keys.extend(f"{section}.{f.name}" for f in dataclasses.fields(cls))
    keys.extend(f"engine.{name}" for name in _ENGINE_FIELDS)
    return tuple(keys)


def _raw_value(cfg: EngineConfig, key: str) -> Any:
    section, _, field = key.partition(".")
    if section == "engine":
        if field not in _ENGINE_FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        return getattr(cfg, field)
    if section not in _SECTION_TYPES or not field:
        raise ConfigError(f"unknown config key {key!r}")
    sub = getattr(cfg, section)
    if field not in {f.name for f in dataclasses.fields(sub)}:
        raise ConfigError(f"unknown config key {key!r}")
    return getattr(sub, field)


def config_values(cfg: EngineConfig) -> dict[str, Any]:
    """Flat JSON-safe mapping of every key to its current value."""
    out: dict[str, Any] = {}
    for key in config_keys():
        val = _raw_value(cfg, key)
        out[key] = val.value if isinstance(val, Detector) else val
    return out


def _coerce(key: str, current: Any, value: Any) -> Any:
    """Turn a string or JSON value into the field's native type."""
    if isinstance(current, Detector) or key == "engine.detector":
        if isinstance(value, Detector):
            return value
        try:
            return Detector(str(value).strip().lower())
        except ValueError:
            raise ConfigError(f"{key}: expected one of threshold, hough; got {value!r}") from None
    if key == "engine.telemetry_port":
        if value is None or (isinstance(value, str) and value.strip().lower() in ("none", "off")):
            return None
        return _coerce_int(key, value)
    if isinstance(current, bool):
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in ("true", "on", "yes", "1"):
            return True
        if text in ("false", "off", "no", "0"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if isinstance(current, int):
        return _coerce_int(key, value)
    if isinstance(current, float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    raise ConfigError(f"{key}: unsupported field type {type(current).__name__}")


def _coerce_int(key: str, value: Any) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if value.is_integer():
            return int(value)
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    try:
        return int(str(value).strip())
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def set_value(cfg: EngineConfig, key: str, value: Any) -> EngineConfig:
    """Return a copy of ``cfg`` with one field changed.

    Unknown keys raise ConfigError; values that break a config invariant
    raise InvalidParameterError from the nested dataclass.  Either way the
    original config is untouched.
    """
    current = _raw_value(cfg, key)
    coerced = _coerce(key, current, value)
    section, _, field = key.partition(".")
    if section == "engine":
        return dataclasses.replace(cfg, **{field: coerced})
    sub = dataclasses.replace(getattr(cfg, section), **{field: coerced})
    return dataclasses.replace(cfg, **{section: sub})


def parse_config_text(text: str, base: EngineConfig | None = None) -> EngineConfig:
    """Parse ``key = value`` lines on top of ``base`` (defaults if omitted)."""
    cfg = base if base is not None else EngineConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq or not key.strip():
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        try:
            cfg = set_value(cfg, key.strip(), value.strip())
        except (ConfigError, InvalidParameterError) as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    return cfg


def _format_value(val: Any) -> str:
    if isinstance(val, Detector):
        return val.value
    if val is None:
        return "none"
    if isinstance(val, bool):
        return "true" if val else "false"
    return repr(val) if isinstance(val, float) else str(val)


def format_config(cfg: EngineConfig) -> str:
    """Render every key so the output re-parses to an equal config."""
    lines = [f"{key} = {_format_value(_raw_value(cfg, key))}" for key in config_keys()]
    return "\n".join(lines) + "\n"


class ControlOp(enum.Enum):
    SET = "set"
    GET = "get"
    SNAPSHOT_ON = "snapshot_on"
    SNAPSHOT_OFF = "snapshot_off"


@dataclass(frozen=True)
class ControlMessage:
    op: ControlOp
    key: str | None = None
    value: Any = None

    def __post_init__(self) -> None:
        if self.op is ControlOp.SET and not self.key:
            raise InvalidParameterError("SET needs a key")


def parse_control(obj: Mapping[str, Any]) -> ControlMessage:
    """Decode one client JSON object into a ControlMessage."""
    if not isinstance(obj, Mapping):
        raise ConfigError("control message must be a JSON object")
    kind = obj.get("type")
    if kind == "set":
        key = obj.get("key")
        if not isinstance(key, str) or not key:
            raise ConfigError("set needs a string 'key'")
        if "value" not in obj:
            raise ConfigError("set needs a 'value'")
        return ControlMessage(op=ControlOp.SET, key=key, value=obj["value"])
    if kind == "get":
        return ControlMessage(op=ControlOp.GET)
    if kind == "snapshot":
        on = obj.get("on")
        if not isinstance(on, bool):
            raise ConfigError("snapshot needs a boolean 'on'")
        return ControlMessage(op=ControlOp.SNAPSHOT_ON if on else ControlOp.SNAPSHOT_OFF)
    raise ConfigError(f"unknown control type {kind!r}")


def apply_control(
    cfg: EngineConfig, msg: ControlMessage
) -> tuple[EngineConfig, dict[str, Any]]:
    """Apply one SET or GET; returns (possibly new config, wire reply).

    A rejected SET leaves the config unchanged and reports why.  Snapshot
    toggles are session state, not config, so the caller handles them.
    """
    if msg.op is ControlOp.GET:
        return cfg, {"type": "config", "values": config_values(cfg)}
    if msg.op is not ControlOp.SET:
        raise InvalidParameterError(f"apply_control cannot handle {msg.op}")
    assert msg.key is not None
    try:
        new_cfg = set_value(cfg, msg.key, msg.value)
    except (ConfigError, InvalidParameterError) as exc:
        return cfg, {"type": "err", "key": msg.key, "detail": str(exc)}
    detail = _format_value(_raw_value(new_cfg, msg.key))
    return new_cfg, {"type": "ack", "key": msg.key, "detail": detail}
