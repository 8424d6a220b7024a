"""Run configuration and verification reports (JSON).

Every check record carries the provenance of its expected value:
``paper`` (a stated formula), ``trivial`` (forced by definitions) or
``derived`` (a frozen numerical oracle).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from .errors import ParameterError

SCHEMA_VERSION = 1
PROVENANCE = ("paper", "trivial", "derived")

# Allowed configuration fields per command.  Unknown fields are rejected.
CONFIG_FIELDS: Dict[str, Dict[str, type]] = {
    "handle": {"n": int, "k": int, "epsilon": float, "delta": float, "sigma_profile": str,
               "rho_profile": str, "tol": float, "grid": int, "locus": bool},
    "maslov": {"n": int, "k": int, "n_max": int, "resolution": str, "points": int, "epsilon": float,
               "delta": float},
    "cpn": {"n": int, "k": int, "r": float, "tol": float, "grid": int},
    "surgery": {"start": str, "k": int, "resolve": str, "mode": str},
    "tori": {"scale": float, "cut": float, "tol": float, "grid": int, "A": float, "target": str,
             "A_target": float},
    "desing": {"n": int, "k": int, "epsilon": float, "delta": float, "kappa": float, "tol": float,
               "grid": int},
}
COMMON_FIELDS = {"schema_version": int, "out": str, "emit_slice": str, "seed": int}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        try:
            return _jsonable(x.item())
        except (ValueError, AttributeError):
            pass
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, (str, int, float, bool)) or x is None:
        return x
    return str(x)


@dataclass
class RunConfig:
    """Command name plus its validated parameter record."""

    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.command not in CONFIG_FIELDS:
            raise ParameterError(f"unknown command {self.command!r}")
        if self.schema_version != SCHEMA_VERSION:
            raise ParameterError(f"unsupported schema_version {self.schema_version}")
        allowed = dict(CONFIG_FIELDS[self.command], **COMMON_FIELDS)
        clean = {}
        for key, val in self.params.items():
            if key not in allowed:
                raise ParameterError(f"unknown config field {key!r} for {self.command}")
            if val is None:
                continue
            typ = allowed[key]
            if typ is float and isinstance(val, int) and not isinstance(val, bool):
                val = float(val)
            if not isinstance(val, typ) or (typ is int and isinstance(val, bool)):
                raise ParameterError(f"config field {key!r} must be {typ.__name__}, got {val!r}")
            clean[key] = val
        if "tol" in clean and not clean["tol"] > 0:
            raise ParameterError("tol must be positive")
        if "grid" in clean and clean["grid"] < 4:
            raise ParameterError("grid must be >= 4 per axis")
        self.params = clean

    @classmethod
    def load(cls, command: str, path: Optional[str], overrides: Dict[str, Any]) -> "RunConfig":
        """Read a JSON config (optional) and apply flag overrides on top."""
        data: Dict[str, Any] = {}
        version = SCHEMA_VERSION
        if path:
            with open(path) as fh:
                raw = json.load(fh)
            if not isinstance(raw, dict):
                raise ParameterError("config file must hold a JSON object")
            version = raw.pop("schema_version", SCHEMA_VERSION)
            section = raw.pop(command, None)
            if section is not None:
                if raw:
                    raise ParameterError(f"unknown top-level config fields {sorted(raw)}")
                raw = section
            data.update(raw)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(command, data, version)

    def get(self, key: str, default=None):
        return self.params.get(key, default)

    def to_dict(self) -> dict:
        return {"schema_version": self.schema_version, "command": self.command, "params": dict(self.params)}


@dataclass
class CheckRecord:
    """One verified claim."""

    name: str
    passed: bool
    measured: Any
    expected: Any
    provenance: str
    tolerance: Optional[float] = None
    witness: Any = None

    def __post_init__(self):
        if self.provenance not in PROVENANCE:
            raise ParameterError(f"provenance must be one of {PROVENANCE}, got {self.provenance!r}")
        self.passed = bool(self.passed)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


@dataclass
class Report:
    """Run metadata, check records and free-form result tables."""

    command: str
    config: Dict[str, Any]
    checks: List[CheckRecord] = field(default_factory=list)
    results: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    timestamp: Optional[str] = None
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, measured, expected, provenance, tolerance=None, witness=None) -> CheckRecord:
        rec = CheckRecord(name, passed, measured, expected, provenance, tolerance, witness)
        self.checks.append(rec)
        return rec

    def stamp(self) -> None:
        """Record the wall-clock time (off by default so reports are byte-stable)."""
        self.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "config": _jsonable(self.config),
            "seed": self.seed,
            "timestamp": self.timestamp,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "results": _jsonable(self.results),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ParameterError(f"unsupported report schema_version {d.get('schema_version')}")
        checks = [CheckRecord(**c) for c in d.get("checks", [])]
        rep = cls(d["command"], d.get("config", {}), checks, d.get("results", {}), d.get("seed"), d.get("timestamp"))
        if "passed" in d and bool(d["passed"]) != rep.passed:
            raise ParameterError("report 'passed' flag disagrees with its checks")
        return rep

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))

    def write(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    def lines(self) -> List[str]:
        out = []
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            out.append(f"[{flag}] {c.name}: measured={_short(c.measured)} expected={_short(c.expected)} ({c.provenance})")
        return out


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    s = json.dumps(_jsonable(v))
    return s if len(s) <= 60 else s[:57] + "..."
