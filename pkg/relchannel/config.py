"""
Configuration management for relchannel.

Scenario files are TOML with one table per concern. Each table maps onto a
dataclass; `Config.to_scenario()` turns the whole file into a validated
ScenarioSpec.
"""

import math
import re
import sys
from dataclasses import dataclass, fields
from dataclasses import field as dataclass_field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

from .core.quadrature import QuadraturePolicy
from .core.scenario import SWITCHING_KINDS, DetectorSpec, FieldSpec, ScenarioSpec, SwitchingSpec
from .errors import ConfigError, PhysicsError

POINTLIKE = "pointlike"


@dataclass
class ChannelConfig:
    """Channel-wide settings."""
    energy_gap: float = 1.0
    seed: int = 0


@dataclass
class FieldConfig:
    """Scalar field settings."""
    mass: float = 0.0


@dataclass
class DetectorConfig:
    """One static detector."""
    position: List[float] = dataclass_field(default_factory=lambda: [0.0, 0.0, 0.0])
    coupling: float = 0.1
    smearing: Union[str, float] = POINTLIKE


@dataclass
class SwitchingConfig:
    """Switching function shared by both detectors."""
    kind: str = "smooth-bump"
    t_start: float = 0.0
    t_end: float = 4.0
    width: Optional[float] = None


@dataclass
class QuadratureConfig:
    """Integration tolerances and regulator ladder."""
    rel_tol: float = 1e-6
    abs_floor: float = 1e-12
    max_subdivisions: int = 200
    oscillation_factor: float = 8.0
    eps_start: float = 0.1
    eps_rungs: int = 8
    eps_order: int = 3


SECTIONS = {
    "channel": ChannelConfig,
    "field": FieldConfig,
    "detector1": DetectorConfig,
    "detector2": DetectorConfig,
    "switching": SwitchingConfig,
    "quadrature": QuadratureConfig,
}


def _line_of(text: Optional[str], section: str, key: Optional[str] = None) -> Optional[int]:
    """1-based line of `[section]`, or of `key` inside it."""
    if not text:
        return None
    current = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        header = re.match(r"^\[\s*([^\]]+?)\s*\]", stripped)
        if header:
            current = header.group(1)
            if key is None and current == section:
                return number
            continue
        if key is not None and current == section and re.match(rf"^{re.escape(key)}\s*=", stripped):
            return number
    return None


def _build_section(name: str, data: Any, text: Optional[str]):
    cls = SECTIONS[name]
    if not isinstance(data, dict):
        raise ConfigError(f"[{name}] must be a table", line=_line_of(text, name))
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(
                f"unknown key '{key}' in [{name}] (expected one of: {', '.join(sorted(known))})",
                line=_line_of(text, name, key),
            )
    return cls(**data)


@dataclass
class Config:
    """Main configuration class."""
    channel: ChannelConfig = dataclass_field(default_factory=ChannelConfig)
    field: FieldConfig = dataclass_field(default_factory=FieldConfig)
    detector1: DetectorConfig = dataclass_field(default_factory=DetectorConfig)
    detector2: DetectorConfig = dataclass_field(default_factory=lambda: DetectorConfig(position=[1.0, 0.0, 0.0]))
    switching: SwitchingConfig = dataclass_field(default_factory=SwitchingConfig)
    quadrature: QuadratureConfig = dataclass_field(default_factory=QuadratureConfig)

    @classmethod
    def default(cls) -> "Config":
        """Create a default configuration."""
        return cls()

    @classmethod
    def from_dict(cls, data: Dict[str, Any], text: Optional[str] = None) -> "Config":
        """Create configuration from dictionary; `text` supplies line numbers."""
        for name in data:
            if name not in SECTIONS:
                raise ConfigError(
                    f"unknown section [{name}] (expected one of: {', '.join(SECTIONS)})",
                    line=_line_of(text, name),
                )
        config = cls()
        for name, section in data.items():
            setattr(config, name, _build_section(name, section, text))
        return config

    @classmethod
    def from_file(cls, config_path: Path) -> "Config":
        """Load configuration from TOML file."""
        try:
            text = Path(config_path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file {config_path}: {e}") from e
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            match = re.search(r"line (\d+)", str(e))
            raise ConfigError(f"{config_path}: {e}", line=int(match.group(1)) if match else None) from e
        config = cls.from_dict(data, text)
        config._source_text = text
        return config

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to dictionary (None values are omitted)."""
        out: Dict[str, Any] = {}
        for name in SECTIONS:
            section = getattr(self, name)
            out[name] = {
                f.name: getattr(section, f.name)
                for f in fields(section)
                if getattr(section, f.name) is not None
            }
        return out

    def save_to_file(self, config_path: Path) -> None:
        """Save configuration to TOML file."""
        try:
            with open(config_path, "wb") as f:
                tomli_w.dump(self.to_dict(), f)
        except OSError as e:
            raise ConfigError(f"cannot write config file {config_path}: {e}") from e

    def _line(self, section: str, key: Optional[str] = None) -> Optional[int]:
        return _line_of(getattr(self, "_source_text", None), section, key)

    def validate(self) -> bool:
        """Validate configuration values; raises ConfigError listing every problem."""
        errors: List[Tuple[str, Optional[int]]] = []

        for name in ("detector1", "detector2"):
            det = getattr(self, name)
            if not isinstance(det.position, (list, tuple)) or len(det.position) != 3:
                errors.append((f"[{name}] position must be a list of 3 numbers", self._line(name, "position")))
            if isinstance(det.smearing, str) and det.smearing != POINTLIKE:
                errors.append((f"[{name}] smearing must be a width or \"{POINTLIKE}\"", self._line(name, "smearing")))

        if self.switching.kind not in SWITCHING_KINDS:
            errors.append((f"Invalid switching kind: {self.switching.kind}", self._line("switching", "kind")))

        if not isinstance(self.channel.seed, int):
            errors.append((f"seed must be an integer, got {self.channel.seed!r}", self._line("channel", "seed")))

        if errors:
            message, line = errors[0]
            if len(errors) > 1:
                message += "; " + "; ".join(m for m, _ in errors[1:])
            raise ConfigError(message, line=line)
        return True

    def _detector(self, det: DetectorConfig) -> DetectorSpec:
        smearing = None if det.smearing == POINTLIKE else float(det.smearing)
        return DetectorSpec(position=tuple(det.position), coupling=det.coupling, smearing=smearing)

    def to_scenario(self) -> ScenarioSpec:
        """Build the validated ScenarioSpec described by this configuration."""
        self.validate()
        try:
            return ScenarioSpec(
                field=FieldSpec(self.field.mass),
                detector1=self._detector(self.detector1),
                detector2=self._detector(self.detector2),
                switching=SwitchingSpec(
                    kind=self.switching.kind,
                    t_start=self.switching.t_start,
                    t_end=self.switching.t_end,
                    width=self.switching.width,
                ),
                energy_gap=self.channel.energy_gap,
                quadrature=QuadraturePolicy(**{f.name: getattr(self.quadrature, f.name) for f in fields(self.quadrature)}),
            )
        except (PhysicsError, TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"invalid scenario: {e}") from e

    def set_separation(self, distance: float) -> None:
        """Place detector 2 at `distance` from detector 1 along x."""
        x, y, z = self.detector1.position
        self.detector2.position = [x + distance, y, z]

    def set_window(self, length: float) -> None:
        """Keep t_start and set the window length t_end − t_start."""
        self.switching.t_end = self.switching.t_start + length

    def set_coupling(self, alpha: float) -> None:
        self.detector1.coupling = alpha
        self.detector2.coupling = alpha

    def set_smearing(self, width: float) -> None:
        if not (width > 0 and math.isfinite(width)):
            raise ConfigError(f"smearing width must be > 0, got {width}")
        self.detector1.smearing = width
        self.detector2.smearing = width
