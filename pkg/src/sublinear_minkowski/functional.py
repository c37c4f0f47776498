"""The domain functional ``F(K) = int_K |grad phi_K|^2`` and what is built on it."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import ConvexBody, mean_width, minkowski_sum, transform
from .grid import SurfaceMeasure, grid_angles, pair
from .measure import body_measure
from .pde import ScalarField, SolverConfig, solve_body


@dataclass(frozen=True)
class EnergyReport:
    F: float
    F_dual: float
    identity_gap: float
    I_energy: float


@dataclass(frozen=True)
class HomogeneityExponents:
    alpha: float
    gamma: float
    variation_factor: float


@dataclass(frozen=True)
class VariationReport:
    formula_side: float
    fd_side: float
    rel_error: float
    steps: tuple = ()
    values: tuple = ()


def energy(field: ScalarField, cfg: SolverConfig | None = None) -> EnergyReport:
    """Dirichlet energy (exact for P1) and ``int phi**(beta+1)`` (nodal quadrature)."""
    beta = field.beta if cfg is None else cfg.beta
    mesh = field.mesh
    phi = field.values
    F = float(phi @ (mesh.stiffness @ phi))
    F_dual = float(mesh.lumped_mass @ np.maximum(phi, 0.0) ** (beta + 1.0))
    return EnergyReport(F, F_dual, abs(F - F_dual) / F, 0.5 * F - F_dual / (beta + 1.0))


def homogeneity_exponents(beta: float, N: int = 2) -> HomogeneityExponents:
    """Scaling degrees: ``F(tK) = t**alpha F(K)``, ``mu_{tK} = t**gamma mu_K``."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    alpha = N + 2.0 * (1.0 + beta) / (1.0 - beta)
    return HomogeneityExponents(alpha, alpha - 1.0, (1.0 + beta) / (1.0 - beta))


def functional(body: ConvexBody, cfg: SolverConfig) -> float:
    return energy(solve_body(body, cfg), cfg).F


def first_variation(
    K: ConvexBody,
    L: ConvexBody,
    cfg: SolverConfig,
    t_step: float = 0.04,
    M: int = 256,
    levels: int = 3,
) -> VariationReport:
    """Compare ``(1+beta)/(1-beta) * int h_L dmu_K`` with a one-sided derivative.

    ``K - tL`` is not a convex body, so the derivative of ``t -> F(K + tL)``
    at ``0+`` is taken from forward differences with steps ``t, t/2, ...``
    (``levels`` of them) and Richardson extrapolation in the step.
    """
    field = solve_body(K, cfg)
    F0 = energy(field, cfg).F
    mu_K = body_measure(field, K, M)
    factor = homogeneity_exponents(cfg.beta).variation_factor
    formula = factor * pair(mu_K, L.support(grid_angles(M)))

    steps = [t_step / 2**k for k in range(levels)]
    values = [functional(minkowski_sum(K, transform(L, t)), cfg) for t in steps]
    table = [[(Ft - F0) / t for t, Ft in zip(steps, values)]]
    for j in range(1, levels):
        prev = table[-1]
        table.append([(2**j * prev[i + 1] - prev[i]) / (2**j - 1) for i in range(len(prev) - 1)])
    fd = table[-1][-1]
    return VariationReport(formula, fd, abs(fd - formula) / abs(formula), tuple(steps), tuple(values))


def euler_gap(field: ScalarField, body: ConvexBody, cfg: SolverConfig, M: int = 256) -> float:
    """Relative mismatch in ``factor * int h_K dmu_K = alpha * F(K)``."""
    ex = homogeneity_exponents(cfg.beta)
    F = energy(field, cfg).F
    lhs = ex.variation_factor * pair(body_measure(field, body, M), body.support(grid_angles(M)))
    return abs(lhs - ex.alpha * F) / (ex.alpha * F)


def isoperimetric_gap(
    K: ConvexBody, cfg: SolverConfig, F_ball: float, M: int = 256, F: float | None = None
) -> float:
    """``F(B_1) / 2**alpha * W(K)**alpha - F(K)`` with the uniform-measure mean width.

    ``F_ball`` is the unit-disk energy for ``cfg.beta`` (see the pinned
    constants); it is passed in so that no 2D solve of the disk is needed.
    ``F`` may carry an already computed ``F(K)``.
    """
    alpha = homogeneity_exponents(cfg.beta).alpha
    W = mean_width(K, SurfaceMeasure.uniform(M))
    return F_ball / 2.0**alpha * W**alpha - (functional(K, cfg) if F is None else F)


def isoperimetric_ratio(F: float, W: float, F_ball: float, alpha: float) -> float:
    """``F / (F(B_1) (W/2)**alpha)``; at most 1, equal to 1 only for disks."""
    return F / (F_ball * math.pow(W / 2.0, alpha))
