import os
import tomllib
from dataclasses import fields
from pathlib import Path
from typing import Union
from dotenv import load_dotenv
from rydwalk.errors import ConfigError
from rydwalk.experiments import AngleProfile, ExperimentConfig, StripeProfile
from rydwalk.lattice import BoundaryTopology, LatticeSpec
from rydwalk.microphysics import RydbergParams
from rydwalk.protocols import DIMER, OPEN

ENV_PREFIX = "RYDWALK_"


def _angle(name: str, value):
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, dict):
        raise ConfigError(f"angle {name} should be a number or a table, but got {value!r}")
    kind = value.get("kind")
    try:
        if kind == "tanh":
            return AngleProfile(value["minus"], value["plus"], value["w"], value.get("center", 0.0), value.get("axis", 0))
        elif kind == "stripe":
            return StripeProfile(value["inside"], value["outside"], value["lo"], value["hi"], value.get("axis", 0))
    except KeyError as e:
        raise ConfigError(f"angle {name} misses {e}")
    raise ConfigError(f"angle {name} should be of kind 'tanh' or 'stripe', but got {kind}")


def _init_sites(init: dict) -> tuple:
    if "sites" in init:
        return tuple(int(site) for site in init["sites"])
    if "cells" in init:
        parities = init.get("parities", [[] for _ in init["cells"]])
        if len(parities) != len(init["cells"]):
            raise ConfigError("[init] cells and parities differ in length")
        return tuple((tuple(cell), tuple(parity)) for cell, parity in zip(init["cells"], parities))
    raise ConfigError("[init] needs either `sites` or `cells`")


def fetch_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    fetch an experiment config from a TOML file
    """
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no config at {path}")
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}")
    for section in ("lattice", "program", "init"):
        if section not in raw:
            raise ConfigError(f"{path} misses the [{section}] section")
    lattice, boundary, program = raw["lattice"], raw.get("boundary", {}), raw["program"]
    noise, output = raw.get("noise", {}), raw.get("output", {})
    try:
        dimension = int(lattice["dimension"])
        spec = LatticeSpec(
            dimension,
            tuple(lattice["cells"]),
            tuple(lattice["a0"]),
            tuple(lattice.get("a1", lattice["a0"])),
            lattice.get("unit_kind", DIMER),
        )
        rules = tuple(boundary.get("rules", [OPEN] * dimension))
        seam = None
        if "seam" in boundary or "seam_rules" in boundary:
            seam = BoundaryTopology(tuple(boundary.get("seam_rules", [OPEN] * dimension)), boundary.get("seam"))
        return ExperimentConfig(
            name=raw.get("experiment", {}).get("name", path.stem),
            lattice=spec,
            program=program["name"],
            angles={name: _angle(name, value) for name, value in raw.get("angles", {}).items()},
            init=_init_sites(raw["init"]),
            steps=int(program.get("steps", 1)),
            boundary=BoundaryTopology(rules),
            seam=seam,
            weights=tuple(raw["init"]["weights"]) if "weights" in raw["init"] else None,
            p_s=noise.get("p_s"),
            dephase_per=noise.get("per", "tessellation"),
            outputs=dict(output),
        )
    except KeyError as e:
        raise ConfigError(f"{path} misses the key {e}")
    except ValueError as e:
        raise ConfigError(f"{path}: {e}")


def _cast(value: str, default):
    if isinstance(default, bool):
        return value.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, tuple):
        return tuple(float(v) for v in value.split(","))
    return float(value)


def fetch_params(**overrides) -> RydbergParams:
    """
    defaults, then RYDWALK_<FIELD> environment variables (a .env file included), then `overrides`
    """
    load_dotenv()
    defaults = RydbergParams()
    values = {}
    for f in fields(RydbergParams):
        env = os.environ.get(ENV_PREFIX + f.name.upper())
        if env is not None:
            try:
                values[f.name] = _cast(env, getattr(defaults, f.name))
            except ValueError:
                raise ConfigError(f"{ENV_PREFIX + f.name.upper()}={env!r} is not a valid {f.name}")
    unknown = set(overrides) - {f.name for f in fields(RydbergParams)}
    if unknown:
        raise ConfigError(f"unknown Rydberg parameters: {sorted(unknown)}")
    values.update(overrides)
    return RydbergParams(**values)


def fetch_runtime() -> dict:
    """
    worker count, seed and output directory, overridable through RYDWALK_WORKERS, RYDWALK_SEED and RYDWALK_OUT.
    No seed keeps every average on its fixed grid.
    """
    load_dotenv()
    seed = os.environ.get(ENV_PREFIX + "SEED")
    try:
        return {
            "workers": int(os.environ.get(ENV_PREFIX + "WORKERS", 1)),
            "seed": None if seed is None else int(seed),
            "out": os.environ.get(ENV_PREFIX + "OUT", "out"),
        }
    except ValueError as e:
        raise ConfigError(str(e))
