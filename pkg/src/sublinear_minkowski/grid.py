"""Uniform direction grid on the unit circle and the two grid-valued types.

Directions are ``theta_i = 2*pi*i/M``.  A :class:`SupportVector` samples a
support function on that grid; a :class:`SurfaceMeasure` is an atomic
non-negative measure with one atom per grid direction.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GridMismatch, ZeroMassMeasure

MIN_DIRECTIONS = 8


def grid_angles(M: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(M) / M


def unit(theta) -> np.ndarray:
    """Unit vector(s) ``(cos theta, sin theta)``; shape ``(..., 2)``."""
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def nearest_bin(theta, M: int):
    """Index of the grid direction closest to ``theta`` and the snap error."""
    theta = np.mod(np.asarray(theta, dtype=float), 2.0 * np.pi)
    idx = np.rint(theta * M / (2.0 * np.pi)).astype(int) % M
    err = np.abs(np.angle(np.exp(1j * (theta - grid_angles(M)[idx]))))
    return idx, err


@dataclass(frozen=True, eq=False)
class SupportVector:
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).ravel()
        if vals.size < 3:
            raise ValueError("a support vector needs at least 3 directions")
        if not np.all(np.isfinite(vals)):
            raise ValueError("support values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def M(self) -> int:
        return self.values.size

    @property
    def thetas(self) -> np.ndarray:
        return grid_angles(self.M)

    def to_dict(self) -> dict:
        return {"directions": self.M, "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "SupportVector":
        values = data["values"]
        if int(data["directions"]) != len(values):
            raise ValueError("'directions' does not match the number of values")
        return cls(np.asarray(values, dtype=float))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "SupportVector":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class SurfaceMeasure:
    """Atomic measure on S^1 with ``weights[i]`` sitting at ``theta_i``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size < 1:
            raise ValueError("empty measure")
        if not np.all(np.isfinite(w)):
            raise ValueError("measure weights must be finite")
        if np.any(w < 0):
            raise ValueError("measure weights must be non-negative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def M(self) -> int:
        return self.weights.size

    @property
    def thetas(self) -> np.ndarray:
        return grid_angles(self.M)

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @classmethod
    def uniform(cls, M: int, total: float = 2.0 * math.pi) -> "SurfaceMeasure":
        """Discretized arc-length measure; total mass ``2*pi`` by default."""
        return cls(np.full(M, total / M))

    def scaled(self, factor: float) -> "SurfaceMeasure":
        return SurfaceMeasure(self.weights * factor)

    def to_dict(self) -> dict:
        return {"directions": self.M, "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "SurfaceMeasure":
        weights = data["weights"]
        if int(data["directions"]) != len(weights):
            raise ValueError("'directions' does not match the number of weights")
        return cls(np.asarray(weights, dtype=float))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "SurfaceMeasure":
        return cls.from_dict(json.loads(Path(path).read_text()))


def pair(mu: SurfaceMeasure, f) -> float:
    """Integrate a grid-sampled function against ``mu``: ``sum_i w_i f(theta_i)``."""
    f = np.asarray(f, dtype=float).ravel()
    if f.size != mu.M:
        raise GridMismatch(f"function has {f.size} samples, measure has {mu.M} bins")
    return float(np.dot(mu.weights, f))


def measure_centroid(mu: SurfaceMeasure) -> np.ndarray:
    """Normalized first moment ``sum w_i xi_i / sum w_i``."""
    if mu.mass <= 0:
        raise ZeroMassMeasure("centroid of a zero measure is undefined")
    return mu.weights @ unit(mu.thetas) / mu.mass
