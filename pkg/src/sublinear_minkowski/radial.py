"""Shooting solver for the radial problem on a ball in any dimension.

``phi'' + (N-1)/r phi' + phi**beta = 0`` on ``(0, R)``, ``phi'(0) = 0``,
``phi(R) = 0``.  The central value ``a = phi(0)`` is found by a bracketed
root search on ``a -> phi(R; a)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import BracketFailure, NonConvergence

MAX_BRACKET_EXPANSIONS = 40


def sphere_area(N: int) -> float:
    """Surface area of the unit sphere in R^N."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def _source(phi, beta):
    if beta == 0.0:
        return np.where(phi > 0, 1.0, 0.0)
    return np.maximum(phi, 0.0) ** beta


def _shoot(a: float, R: float, N: int, beta: float, rtol: float, dense: bool = False):
    """Integrate outward from the center with a series start at tiny ``r0``."""
    r0 = R * 1e-6
    fa = a**beta if beta > 0 else 1.0
    y0 = [a - fa * r0**2 / (2 * N), -fa * r0 / N, 0.0]

    def rhs(r, y):
        phi, dphi, _ = y
        return [dphi, -(N - 1) / r * dphi - _source(phi, beta), dphi * dphi * r ** (N - 1)]

    return solve_ivp(
        rhs, (r0, R), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-3 * max(a, 1e-300),
        dense_output=dense,
    )


@dataclass(frozen=True)
class RadialSolution:
    R: float
    N: int
    beta: float
    r: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    boundary_slope: float
    energy: float

    @property
    def center_value(self) -> float:
        return float(self.phi[0])

    def __call__(self, r) -> np.ndarray:
        """Profile evaluated at radius ``r`` (zero outside the ball)."""
        r = np.asarray(r, dtype=float)
        spline = CubicHermiteSpline(self.r, self.phi, self.dphi)
        return np.where(r <= self.R, spline(np.clip(r, 0.0, self.R)), 0.0)

    def to_csv(self) -> str:
        lines = ["r,phi"] + [f"{ri!r},{pi!r}" for ri, pi in zip(self.r, self.phi)]
        return "\n".join(lines) + "\n"


def radial_oracle(
    R: float = 1.0, N: int = 2, beta: float = 0.5, tol: float = 1e-12, rtol: float = 1e-12,
    samples: int = 4001,
) -> RadialSolution:
    """Radial solution on the ball of radius ``R`` in ``R^N``.

    ``beta = 0`` (the torsion problem) is accepted for calibration.  The
    returned ``energy`` is ``int_B |grad phi|^2``.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    if N < 2:
        raise ValueError("N must be at least 2")
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")

    def end_value(a):
        return _shoot(a, R, N, beta, rtol).y[0, -1]

    # scaling guess: a ~ (R^2 / 2N)^(1/(1-beta)) up to O(1) factors
    guess = (R * R / (2.0 * N)) ** (1.0 / (1.0 - beta))
    lo, hi = guess * 0.5, guess * 2.0
    f_lo, f_hi = end_value(lo), end_value(hi)
    for _ in range(MAX_BRACKET_EXPANSIONS):
        if f_lo < 0 < f_hi:
            break
        if f_lo >= 0:
            lo *= 0.25
            f_lo = end_value(lo)
        if f_hi <= 0:
            hi *= 4.0
            f_hi = end_value(hi)
    else:
        raise BracketFailure("no sign change of phi(R) found for the central value")

    a = brentq(end_value, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=400)
    sol = _shoot(a, R, N, beta, rtol, dense=True)
    if abs(sol.y[0, -1]) >= tol * max(a, 1.0):
        raise NonConvergence(f"|phi(R)| = {abs(sol.y[0, -1]):.3e} exceeds tolerance")
    r = np.linspace(0.0, R, samples)
    inner = sol.sol(np.maximum(r, sol.t[0]))
    phi, dphi = inner[0].copy(), inner[1].copy()
    phi[0], dphi[0] = a, 0.0
    phi[-1] = 0.0
    energy = sphere_area(N) * float(sol.y[2, -1])
    return RadialSolution(R, N, beta, r, phi, dphi, float(sol.y[1, -1]), energy)


def ball_energy(R: float = 1.0, N: int = 2, beta: float = 0.5, stable_tol: float = 1e-8):
    """``int_B |grad phi|^2`` tightened by shrinking the ODE tolerance until stable.

    Returns ``(energy, center_value, rtol_used)``.
    """
    rtol = 1e-8
    prev = radial_oracle(R, N, beta, rtol=rtol)
    while rtol > 1e-14:
        rtol /= 10.0
        cur = radial_oracle(R, N, beta, rtol=rtol)
        if abs(cur.energy - prev.energy) <= stable_tol * abs(cur.energy):
            return cur.energy, cur.center_value, rtol
        prev = cur
    raise NonConvergence("radial energy did not stabilize")
