"""
Plot-ready scan tables.

A ScanResult is an ordered list of rows sharing one column schema. It is
written either as TSV, with a '#'-prefixed header naming every column and
its unit, or as schema-versioned JSON with one object per row.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List

import numpy as np

SCHEMA_VERSION = 1
MISSING = "NA"
STATUS_OK = "ok"


@dataclass(frozen=True)
class Column:
    name: str
    unit: str = "1"


@dataclass
class ScanResult:
    """Rows of one scan, in sweep order.

    Every row has a `status` entry: "ok" or the class of the failure:
    "physics", "convergence", "config", or "error" for any other numerical
    failure. Failed rows keep their swept values and leave computed columns
    empty rather than filling them in.
    """

    command: str
    columns: List[Column]
    sweep: str
    rows: List[Dict[str, Any]] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names in {names}")
        if self.sweep not in names:
            raise ValueError(f"sweep column {self.sweep!r} not in schema")
        if "status" not in names:
            self.columns.append(Column("status", "-"))
        if "message" not in names:
            self.columns.append(Column("message", "-"))

    @property
    def names(self) -> List[str]:
        return [c.name for c in self.columns]

    def add_row(self, row: Dict[str, Any]) -> None:
        unknown = set(row) - set(self.names)
        if unknown:
            raise ValueError(f"row has columns outside the schema: {sorted(unknown)}")
        full = {name: row.get(name) for name in self.names}
        if full["status"] is None:
            full["status"] = STATUS_OK
        self.rows.append(full)

    def extend(self, rows: Iterable[Dict[str, Any]]) -> None:
        for row in rows:
            self.add_row(row)

    def sort(self) -> None:
        """Order rows by the sweep column (stable for equal values)."""
        self.rows.sort(key=lambda r: r[self.sweep])

    @property
    def failures(self) -> List[Dict[str, Any]]:
        return [r for r in self.rows if r["status"] != STATUS_OK]

    def column(self, name: str) -> List[Any]:
        return [r[name] for r in self.rows]

    def to_tsv(self) -> str:
        lines = [f"# relchannel {self.command} (schema {SCHEMA_VERSION})"]
        for key in sorted(self.metadata):
            lines.append(f"# {key} = {format_value(self.metadata[key])}")
        lines.append("# " + "\t".join(f"{c.name}[{c.unit}]" for c in self.columns))
        for row in self.rows:
            lines.append("\t".join(format_value(row[name]) for name in self.names))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "sweep": self.sweep,
            "metadata": {k: _json_value(v) for k, v in sorted(self.metadata.items())},
            "columns": [{"name": c.name, "unit": c.unit} for c in self.columns],
            "rows": [{name: _json_value(row[name]) for name in self.names} for row in self.rows],
        }
        return json.dumps(payload, indent=2, allow_nan=False) + "\n"

    def render(self, fmt: str = "tsv") -> str:
        if fmt == "tsv":
            return self.to_tsv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown output format: {fmt}")


def format_value(value: Any) -> str:
    """Fixed textual form of one cell."""
    if value is None:
        return MISSING
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return MISSING
        return format(value, ".12g")
    if isinstance(value, complex):
        return f"{format(value.real, '.12g')}{format(value.imag, '+.12g')}j"
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    return str(value).replace("\t", " ").replace("\n", " ")


def _json_value(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if hasattr(value, "item"):
        return _json_value(value.item())
    return value


def linspace(start: float, stop: float, steps: int) -> List[float]:
    """`steps` evenly spaced points including both ends."""
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    return np.linspace(start, stop, steps).tolist()


def logspace(start: float, stop: float, steps: int) -> List[float]:
    """`steps` geometrically spaced points including both ends."""
    if start <= 0 or stop <= 0:
        raise ValueError("log-spaced sweep needs positive bounds")
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    return np.geomspace(start, stop, steps).tolist()
