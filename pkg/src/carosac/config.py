"""Single-file run configuration with ``[rig] [simulation] [env] [td3]`` sections."""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .cable_sim import CableMaterial, SimParams
from .envs import EnvConfig
from .errors import ConfigError, InvalidRig, ParseError
from .kinematics import FkSolverConfig, RigGeometry
from .td3.agent import Td3Config

MATERIAL_KEYS = {"linear_mass", "compliance", "damping"}


@dataclass(frozen=True)
class RunConfig:
    rig: RigGeometry
    sim: SimParams = field(default_factory=SimParams)
    material: CableMaterial = field(default_factory=CableMaterial)
    env: EnvConfig = field(default_factory=EnvConfig)
    td3: Td3Config = field(default_factory=Td3Config)
    fk: FkSolverConfig = field(default_factory=FkSolverConfig)


def default_config_path() -> Path:
    return Path(str(resources.files("carosac") / "configs" / "default.toml"))


def _read_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ParseError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def rig_from_dict(d: dict) -> RigGeometry:
    missing = {"anchors", "offsets", "workspace", "length_bounds"} - set(d)
    if missing:
        raise ParseError(f"[rig] missing keys: {sorted(missing)}")
    try:
        anchors = np.array(d["anchors"], dtype=float)
        offsets = np.array(d["offsets"], dtype=float)
        workspace = np.array(d["workspace"], dtype=float)
        bounds = [float(v) for v in d["length_bounds"]]
    except (TypeError, ValueError) as exc:
        raise ParseError(f"[rig] arrays must be numeric: {exc}") from exc
    if anchors.ndim != 2 or anchors.shape[0] != 4:
        raise InvalidRig(f"exactly 4 anchors required (got {anchors.shape[0] if anchors.ndim else 0})")
    if offsets.ndim != 2 or offsets.shape[0] != 4:
        raise InvalidRig(f"exactly 4 offsets required (got {offsets.shape[0] if offsets.ndim else 0})")
    if workspace.shape != (2, 3):
        raise InvalidRig("workspace must be [[xmin, ymin, zmin], [xmax, ymax, zmax]]")
    if len(bounds) != 2:
        raise InvalidRig("length_bounds must be [min, max]")
    return RigGeometry(anchors, offsets, workspace[0], workspace[1], tuple(bounds))


def load_rig_config(path) -> RigGeometry:
    data = _read_toml(path)
    if "rig" not in data:
        raise ParseError(f"{path}: missing [rig] section")
    return rig_from_dict(data["rig"])


def _build(cls, section: dict, name: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"[{name}] unknown keys: {sorted(unknown)}")
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}] {exc}") from exc


def load_config(path) -> RunConfig:
    data = _read_toml(path)
    unknown = set(data) - {"rig", "simulation", "env", "td3", "fk"}
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    if "rig" not in data:
        raise ParseError(f"{path}: missing [rig] section")
    rig = rig_from_dict(data["rig"])
    sim_section = dict(data.get("simulation", {}))
    material = {k: sim_section.pop(k) for k in list(sim_section) if k in MATERIAL_KEYS}
    return RunConfig(
        rig=rig,
        sim=_build(SimParams, sim_section, "simulation"),
        material=_build(CableMaterial, material, "simulation"),
        env=_build(EnvConfig, dict(data.get("env", {})), "env"),
        td3=_build(Td3Config, dict(data.get("td3", {})), "td3"),
        fk=_build(FkSolverConfig, dict(data.get("fk", {})), "fk"),
    )
