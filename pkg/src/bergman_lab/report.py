"""Experiment reports (CSV/JSON), flat config files and moment-cache persistence."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .numerics import LogValue

CACHE_FORMAT = "bergman-lab-moment-cache"
CACHE_VERSION = 1

CONFIG_KEYS = {
    "domain": str,
    "dimension": int,
    "ellipsoid_exponents": str,
    "weight": str,
    "quad_rel_tol": float,
    "quad_max_depth": int,
}


class ConfigError(ValueError):
    pass


class CacheError(ValueError):
    pass


def format_cell(v: Any) -> str:
    """17 significant digits for floats, so CSV values round-trip exactly."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.16e}"
    return str(v)


def report_timestamp() -> str:
    """UTC time from ``SOURCE_DATE_EPOCH`` (0 when unset), keeping reports reproducible."""
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class ExperimentReport:
    command: str
    config: dict[str, Any]
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    tool_version: str = ""
    timestamp: str = ""

    def __post_init__(self):
        if not self.tool_version:
            from . import __version__

            self.tool_version = __version__
        if not self.timestamp:
            self.timestamp = report_timestamp()

    def add_row(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} cells, expected {len(self.columns)}")
        self.rows.append(list(values))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([format_cell(v) for v in row])
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
            "config": self.config,
            "columns": self.columns,
            "rows": self.rows,
            "summary": self.summary,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ExperimentReport:
        d = json.loads(text)
        return cls(d["command"], d["config"], d["columns"], d["rows"], d["summary"], d["tool_version"],
                   d["timestamp"])

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown output format {fmt!r}")


def parse_config(text: str) -> dict[str, Any]:
    """Flat ``key = value`` lines; ``#`` starts a comment.  Unknown keys are rejected."""
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    return out


def load_config(path: str | os.PathLike) -> dict[str, Any]:
    return parse_config(Path(path).read_text())


# moment caches


def _fingerprint_of(table) -> dict[str, Any]:
    return {k: (repr(v) if isinstance(v, float) else v) for k, v in table.fingerprint().items()}


def cache_key(table) -> str:
    blob = json.dumps(_fingerprint_of(table), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _encode(v: LogValue) -> list:
    return [v.sign, float(v.logmag).hex()]


def _decode(item) -> LogValue:
    sign, hexmag = item
    return LogValue(int(sign), float.fromhex(hexmag)) if sign else LogValue.zero()


def save_cache(table, path: str | os.PathLike) -> None:
    """Write the table's moments with exact (hex) log-magnitudes."""
    doc = {
        "format": CACHE_FORMAT,
        "version": CACHE_VERSION,
        "fingerprint": _fingerprint_of(table),
        "moments": [[[x.hex() for x in k], *_encode(v)] for k, v in sorted(table.cache.items())],
        "radial": [[y.hex(), *_encode(v), table.radial_err.get(y, 0.0).hex()]
                   for y, v in sorted(table.radial.items())],
    }
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(json.dumps(doc, sort_keys=True))
    os.replace(tmp, path)


def load_cache(table, path: str | os.PathLike) -> int:
    """Fill ``table`` from ``path``; returns the number of moments loaded.

    Raises :class:`CacheError` on parse failures or fingerprint mismatch.
    """
    try:
        doc = json.loads(Path(path).read_text())
        if doc.get("format") != CACHE_FORMAT or doc.get("version") != CACHE_VERSION:
            raise CacheError(f"{path}: not a version {CACHE_VERSION} moment cache")
        fp = doc["fingerprint"]
        moments = [(tuple(float.fromhex(x) for x in item[0]), _decode(item[1:3])) for item in doc["moments"]]
        radial = [(float.fromhex(item[0]), _decode(item[1:3]), float.fromhex(item[3])) for item in doc["radial"]]
    except CacheError:
        raise
    except (OSError, ValueError, KeyError, TypeError, IndexError) as exc:
        raise CacheError(f"{path}: unreadable moment cache ({exc})") from exc
    expected = _fingerprint_of(table)
    if fp != expected:
        diff = sorted(k for k in set(fp) | set(expected) if fp.get(k) != expected.get(k))
        raise CacheError(f"{path}: fingerprint mismatch on {', '.join(diff)}")
    for key, val in moments:
        table.cache.setdefault(key, val)
    for y, val, err in radial:
        table.radial.setdefault(y, val)
        table.radial_err.setdefault(y, err)
    return len(moments)


__all__ = [
    "CacheError", "ConfigError", "ExperimentReport", "cache_key", "format_cell", "load_cache", "load_config",
    "parse_config", "report_timestamp", "save_cache",
]
