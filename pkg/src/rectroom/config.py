"""Room/solver configuration files.

One YAML (or JSON) document::

    speed_of_sound: 343.0
    axes:
      - length: 1.0
        beta_minus: 0.1+0.1j          # inline complex admittance
        beta_plus: {zeta: 6}          # normalized impedance
      - length: 1.4
        beta_minus: {table: wall.csv} # rows "f_hz, re_beta, im_beta"
        beta_plus: [0.125, 0.125]     # [re, im]
    solver:
      n_max: 40

Table paths are resolved relative to the config file.
"""

from __future__ import annotations

import dataclasses
import re
from pathlib import Path
from typing import Any, Dict, Tuple

import yaml

from rectroom.core import Admittance, AxisBoundary, RoomSpec, SolverParams
from rectroom.errors import ConfigError

_SOLVER_KEYS = {f.name for f in dataclasses.fields(SolverParams)}


def parse_complex(value: Any) -> complex:
    """Number, ``[re, im]`` pair or string such as ``"0.1-0.2j"`` / ``"0.1-0.2i"``."""
    if isinstance(value, bool):
        raise ConfigError(f"not a complex number: {value!r}")
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        text = re.sub(r"\s+", "", value).replace("i", "j")
        try:
            return complex(text)
        except ValueError:
            pass
    raise ConfigError(f"not a complex number: {value!r}")


def _admittance(spec: Any, base: Path, where: str) -> Admittance:
    if isinstance(spec, dict):
        if len(spec) != 1:
            raise ConfigError(f"{where}: give exactly one of beta, zeta, table")
        (kind, val), = spec.items()
        if kind == "beta":
            return Admittance.const(parse_complex(val))
        if kind == "zeta":
            return Admittance.from_impedance(parse_complex(val))
        if kind == "table":
            path = Path(val)
            if not path.is_absolute():
                path = base / path
            if not path.exists():
                raise ConfigError(f"{where}: admittance table {path} not found")
            return Admittance.from_csv(path)
        raise ConfigError(f"{where}: unknown admittance kind {kind!r}")
    return Admittance.const(parse_complex(spec))


def room_from_dict(doc: Dict[str, Any], base: Path = Path(".")) -> RoomSpec:
    if not isinstance(doc, dict) or "axes" not in doc:
        raise ConfigError("config needs an 'axes' list")
    axes = []
    for j, ax in enumerate(doc["axes"]):
        where = f"axes[{j}]"
        try:
            length = float(ax["length"])
            bm = _admittance(ax.get("beta_minus", 0), base, where + ".beta_minus")
            bp = _admittance(ax.get("beta_plus", 0), base, where + ".beta_plus")
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{where}: {exc}") from None
        axes.append(AxisBoundary(length, bm, bp))
    return RoomSpec(tuple(axes), float(doc.get("speed_of_sound", 343.0)))


def solver_from_dict(doc: Dict[str, Any]) -> SolverParams:
    section = doc.get("solver") or {}
    unknown = set(section) - _SOLVER_KEYS
    if unknown:
        raise ConfigError(f"unknown solver keys: {sorted(unknown)}")
    return SolverParams(**section)


def load_config(path) -> Tuple[RoomSpec, SolverParams, Dict[str, Any]]:
    """Parse a config file; returns the room, solver parameters and raw document."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return room_from_dict(doc, path.parent), solver_from_dict(doc), doc
