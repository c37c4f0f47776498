"""Versioned defaults: solver settings, check tolerances and pinned constants.

The packaged ``data/defaults.json`` is used unless the environment variable
``SUBLINEAR_MINKOWSKI_DEFAULTS`` names another file.
"""
from __future__ import annotations

import copy
import json
import os
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .pde import SolverConfig
from .radial import ball_energy, radial_oracle

ENV_VAR = "SUBLINEAR_MINKOWSKI_DEFAULTS"


def defaults_path() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path(str(resources.files(__package__).joinpath("data/defaults.json")))


@lru_cache(maxsize=8)
def _load(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def load_defaults() -> dict:
    """A private copy of the active defaults document."""
    return copy.deepcopy(_load(str(defaults_path())))


def tolerance(name: str) -> float:
    return float(load_defaults()["tolerances"][name])


def solver_config(**overrides) -> SolverConfig:
    params = load_defaults()["solver"]
    params.update({k: v for k, v in overrides.items() if v is not None})
    return SolverConfig(**params)


def _beta_key(beta: float) -> str:
    return repr(float(beta))


def pinned(beta: float) -> dict:
    """Pinned unit-disk constants for ``beta``; ``KeyError`` if never pinned."""
    pins = load_defaults()["pinned"]
    key = _beta_key(beta)
    if key not in pins:
        raise KeyError(f"no pinned constants for beta={beta}; run the pin-constants command")
    return pins[key]


def pin_constants(beta: float, stable_tol: float = 1e-8, center_rtol: float = 1e-12) -> dict:
    """Compute the unit-disk energy and central value for ``beta`` from the radial oracle."""
    F, _, rtol = ball_energy(1.0, 2, beta, stable_tol=stable_tol)
    center = radial_oracle(1.0, 2, beta, rtol=center_rtol).center_value
    return {
        "F_ball": F,
        "phi0": center,
        "tolerance": 1e-6,
        "oracle": {"R": 1.0, "N": 2, "stable_tol": stable_tol, "energy_rtol": rtol,
                   "center_rtol": center_rtol},
    }


def write_pins(path: Path, betas) -> dict:
    """Write a defaults document with freshly pinned constants for ``betas``."""
    doc = load_defaults()
    for b in betas:
        doc["pinned"][_beta_key(b)] = pin_constants(b)
    doc["version"] = int(doc.get("version", 0)) + 1
    path.write_text(json.dumps(doc, indent=2) + "\n")
    _load.cache_clear()
    return doc
