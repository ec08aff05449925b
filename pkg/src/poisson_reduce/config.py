"""
Run configuration: JSON files with a ``version`` field, validated fail-closed.

Canonical form (what :meth:`RunConfig.to_dict` emits)::

    {
      "version": 1,
      "inertia": [I1, I2, I3],
      "potential": {"kind": "zero"} | {"kind": "linear", "c": [..]}
                   | {"kind": "quadratic", "B": [[..], [..], [..]]},
      "initial": {"kind": "full", "q": [[..], [..], [..]], "omega": [..]}
                 | {"kind": "reduced", "nu": [..], "nudot": [..], "k": k},
      "integrator": {"method": "rk4", "step": .., "t_end": .., ...},
      "outputs": {"trajectory_csv": .., "report_json": .., "plot_svg": ..},
      "curvature": false,
      "curvature_scale": 1.0
    }

``outputs`` entries are optional; relative paths are resolved against the
directory of the config file. ``curvature`` requests the ``kg`` column of
reduced runs and ``curvature_scale`` is the fault-injection multiplier of the
reduced gyroscopic form.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

from .body import InertiaTensor, potential_from_dict
from .errors import ConfigError
from .integrate import IntegratorSettings

VERSION = 1
TOP_KEYS = {"version", "inertia", "potential", "initial", "integrator", "outputs",
            "curvature", "curvature_scale"}
OUTPUT_KEYS = ("trajectory_csv", "report_json", "plot_svg")
_SETTINGS_FIELDS = {f.name: f for f in fields(IntegratorSettings)}


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _number(x, path: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        _fail(path, f"expected a finite number, got {x!r}")
    return float(x)


def _vector(x, n: int, path: str) -> list:
    if not isinstance(x, list) or len(x) != n:
        _fail(path, f"expected a list of {n} numbers")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(x)]


def _matrix(x, path: str) -> list:
    if not isinstance(x, list) or len(x) != 3:
        _fail(path, "expected 3 rows of 3 numbers")
    return [_vector(r, 3, f"{path}[{i}]") for i, r in enumerate(x)]


def _keys(d, allowed, required, path: str):
    if not isinstance(d, dict):
        _fail(path, "expected an object")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        _fail(path, f"unknown field(s) {unknown}")
    missing = sorted(set(required) - set(d))
    if missing:
        _fail(path, f"missing field(s) {missing}")


def _potential(d) -> dict:
    _keys(d, {"kind", "c", "B"}, {"kind"}, "potential")
    kind = d["kind"]
    if kind == "zero":
        _keys(d, {"kind"}, (), "potential")
        out = {"kind": "zero"}
    elif kind == "linear":
        _keys(d, {"kind", "c"}, {"c"}, "potential")
        out = {"kind": "linear", "c": _vector(d["c"], 3, "potential.c")}
    elif kind == "quadratic":
        _keys(d, {"kind", "B"}, {"B"}, "potential")
        out = {"kind": "quadratic", "B": _matrix(d["B"], "potential.B")}
    else:
        _fail("potential.kind", f"expected zero, linear or quadratic, got {kind!r}")
    try:
        potential_from_dict(out)
    except ValueError as exc:
        _fail("potential", str(exc))
    return out


def _initial(d) -> dict:
    if not isinstance(d, dict):
        _fail("initial", "expected an object")
    kind = d.get("kind")
    if kind == "full":
        if "k" in d:
            _fail("initial.k", "a full initial state fixes the momentum itself; remove k")
        _keys(d, {"kind", "q", "omega"}, {"q", "omega"}, "initial")
        return {"kind": "full", "q": _matrix(d["q"], "initial.q"),
                "omega": _vector(d["omega"], 3, "initial.omega")}
    if kind == "reduced":
        if "k" not in d:
            _fail("initial.k", "a reduced initial state requires the momentum constant k")
        _keys(d, {"kind", "nu", "nudot", "k"}, {"nu", "nudot", "k"}, "initial")
        return {"kind": "reduced", "nu": _vector(d["nu"], 3, "initial.nu"),
                "nudot": _vector(d["nudot"], 3, "initial.nudot"),
                "k": _number(d["k"], "initial.k")}
    _fail("initial.kind", f"expected full or reduced, got {kind!r}")


def _integrator(d) -> dict:
    _keys(d, _SETTINGS_FIELDS, (), "integrator")
    out = asdict(IntegratorSettings())
    for key, value in d.items():
        path = f"integrator.{key}"
        if key == "method":
            if not isinstance(value, str):
                _fail(path, "expected a string")
            out[key] = value
        elif key == "renorm_every":
            if isinstance(value, bool) or not isinstance(value, int):
                _fail(path, "expected an integer")
            out[key] = value
        else:
            out[key] = _number(value, path)
    try:
        IntegratorSettings(**out)
    except ValueError as exc:
        _fail("integrator", str(exc))
    return out


@dataclass(frozen=True)
class RunConfig:
    inertia: tuple
    potential: dict
    initial: dict
    integrator: dict = field(default_factory=lambda: asdict(IntegratorSettings()))
    outputs: dict = field(default_factory=dict)
    curvature: bool = False
    curvature_scale: float = 1.0
    base_dir: Optional[Path] = field(default=None, compare=False)

    @classmethod
    def from_dict(cls, d: Any, base_dir: Optional[Path] = None) -> "RunConfig":
        _keys(d, TOP_KEYS, {"version", "inertia", "potential", "initial"}, "config")
        if d["version"] != VERSION:
            _fail("version", f"unsupported version {d['version']!r}; expected {VERSION}")
        inertia = _vector(d["inertia"], 3, "inertia")
        try:
            InertiaTensor(*inertia)
        except ValueError as exc:
            _fail("inertia", str(exc))
        outputs = d.get("outputs", {})
        _keys(outputs, OUTPUT_KEYS, (), "outputs")
        for key, value in outputs.items():
            if not isinstance(value, str) or not value:
                _fail(f"outputs.{key}", "expected a non-empty path string")
        curvature = d.get("curvature", False)
        if not isinstance(curvature, bool):
            _fail("curvature", "expected true or false")
        scale = _number(d.get("curvature_scale", 1.0), "curvature_scale")
        initial = _initial(d["initial"])
        if initial["kind"] == "full" and (curvature or "curvature_scale" in d):
            _fail("curvature", "only meaningful for reduced runs")
        return cls(tuple(inertia), _potential(d["potential"]), initial,
                   _integrator(d.get("integrator", {})), dict(outputs), curvature, scale,
                   base_dir)

    def to_dict(self) -> dict:
        out = {"version": VERSION, "inertia": list(self.inertia), "potential": self.potential,
               "initial": self.initial, "integrator": self.integrator, "outputs": self.outputs}
        if self.initial["kind"] == "reduced":
            out["curvature"] = self.curvature
            out["curvature_scale"] = self.curvature_scale
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @property
    def settings(self) -> IntegratorSettings:
        return IntegratorSettings(**self.integrator)

    def output_path(self, key: str) -> Optional[Path]:
        p = self.outputs.get(key)
        if p is None:
            return None
        p = Path(p)
        if not p.is_absolute() and self.base_dir is not None:
            p = self.base_dir / p
        return p


def loads(text: str, base_dir: Optional[Path] = None) -> RunConfig:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return RunConfig.from_dict(d, base_dir)


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return loads(text, path.resolve().parent)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
