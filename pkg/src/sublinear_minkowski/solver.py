"""Recover a convex body from a prescribed measure on the circle.

The body is found by maximizing ``F(K)`` over convex bodies with mean width
``W_mu(K) = 1``.  At a maximizer ``mu_K = lambda * mu`` for some
``lambda > 0``, and since ``mu_{tK} = t**gamma mu_K`` the rescaled body
``lambda**(-1/gamma) K`` has measure ``mu``.

Only directions carrying target mass are used as constraint normals: ``W``
does not see the others and adding a face can only shrink ``K`` and hence
``F``, so a maximizer has no other faces.  The ascent works on the support
values ``h`` at those directions, with the gradient of
``log F - alpha log W`` taken from the first-variation formula.  It is
preconditioned by the inverse of the mixed-area operator (regularized),
which removes the ``1/dtheta**2`` stiffness of short faces.
"""
from __future__ import annotations

import hashlib
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CentroidViolation,
    CollapseDetected,
    DegenerateMeasure,
    GridMismatch,
    NonConvergence,
    ZeroMassMeasure,
)
from .functional import energy, homogeneity_exponents
from .geometry import ConvexBody, halfplane_intersection, recenter, transform
from .grid import SurfaceMeasure, grid_angles, measure_centroid
from .measure import body_measure
from .pde import SolverConfig, solve_body

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TargetMeasure:
    measure: SurfaceMeasure
    centroid: np.ndarray
    nondegeneracy: float
    centroid_ok: bool
    nondegenerate_ok: bool

    @property
    def M(self) -> int:
        return self.measure.M

    @property
    def weights(self) -> np.ndarray:
        return self.measure.weights


def min_width_integral(mu: SurfaceMeasure) -> float:
    """``min_theta sum_i w_i |cos(theta - theta_i)| / mass``.

    Each term is concave between its zeros, so the minimum sits at one of
    the angles ``theta_i +- pi/2``.
    """
    th = mu.thetas[mu.weights > 0]
    w = mu.weights[mu.weights > 0]
    cand = np.concatenate([th + math.pi / 2, th - math.pi / 2])
    vals = np.abs(np.cos(cand[:, None] - th[None, :])) @ w
    return float(vals.min() / mu.mass)


def validate_target(
    mu: SurfaceMeasure, centroid_tol: float = 1e-2, nondegeneracy_tol: float = 1e-6
) -> TargetMeasure:
    """Check the two solvability conditions for a target measure.

    Raises :class:`CentroidViolation` when ``|int xi dmu| / mass`` exceeds
    ``centroid_tol`` and :class:`DegenerateMeasure` when the normalized
    width integral drops below ``nondegeneracy_tol``.
    """
    if mu.mass <= 0:
        raise ZeroMassMeasure("target measure has zero mass")
    c = measure_centroid(mu)
    nd = min_width_integral(mu)
    target = TargetMeasure(mu, c, nd, bool(np.linalg.norm(c) <= centroid_tol), nd >= nondegeneracy_tol)
    if not target.centroid_ok:
        raise CentroidViolation(f"|centroid| = {np.linalg.norm(c):.3e} exceeds {centroid_tol:g}")
    if not target.nondegenerate_ok:
        raise DegenerateMeasure(f"min width integral {nd:.3e} below {nondegeneracy_tol:g}")
    return target


@dataclass(frozen=True)
class OptimizerConfig:
    step0: float = 0.1
    step_max: float = 0.5
    step_min: float = 1e-4
    max_iter: int = 200
    h_floor: float = 1e-3
    stop_tol_F: float = 1e-7
    stop_tol_h: float = 1e-6
    residual_tol: float = 1e-3
    # solves run on eval_scale * K so the mesh resolves the body like a unit disk
    eval_scale: float = 2.0

    def __post_init__(self):
        for name in ("step0", "step_max", "step_min", "h_floor", "stop_tol_F", "stop_tol_h",
                     "residual_tol", "eval_scale"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class MinkowskiSolution:
    body: ConvexBody
    lambda_: float
    rescale_t: float
    residual: float
    residual_scaled: float
    iterations: int
    F_trace: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    measure: SurfaceMeasure | None = None
    stop_reason: str = ""

    def to_dict(self) -> dict:
        return {
            "vertices": self.body.vertices.tolist(),
            "lambda": self.lambda_,
            "rescale_t": self.rescale_t,
            "residual": self.residual,
            "iterations": self.iterations,
        }


def residual(mu_k: SurfaceMeasure, target) -> tuple[float, float]:
    """Relative L1 mismatch ``(raw, scaled)``.

    ``raw = sum |w_K - w_T| / sum w_T``; ``scaled`` first rescales ``mu_k``
    to the target's total mass.
    """
    tw = target.weights
    if mu_k.M != len(tw):
        raise GridMismatch(f"grids differ: {mu_k.M} vs {len(tw)}")
    total = tw.sum()
    raw = float(np.abs(mu_k.weights - tw).sum() / total)
    c = total / mu_k.mass if mu_k.mass > 0 else 0.0
    scaled = float(np.abs(c * mu_k.weights - tw).sum() / total)
    return raw, scaled


def _preconditioner(thetas: np.ndarray) -> np.ndarray:
    """Inverse of the regularized mixed-area operator on the given normals.

    For consecutive normals at angular gap ``d`` the operator has
    ``cot`` terms on the diagonal and ``-1/sin(d)`` off it; the diagonal is
    shifted by twice the angular span of each direction, which makes it
    positive definite for the gaps that occur here.
    """
    n = len(thetas)
    gaps = np.mod(np.roll(thetas, -1) - thetas, 2 * math.pi)
    Q = np.zeros((n, n))
    idx = np.arange(n)
    nxt = (idx + 1) % n
    Q[idx, idx] += 1.0 / np.tan(gaps) + 1.0 / np.tan(np.roll(gaps, 1))
    Q[idx, nxt] -= 1.0 / np.sin(gaps)
    Q[nxt, idx] -= 1.0 / np.sin(gaps)
    span = 0.5 * (gaps + np.roll(gaps, 1))
    shift = 2.0
    for _ in range(20):
        A = Q + np.diag(shift * span)
        if np.linalg.eigvalsh(A).min() > 1e-12:
            return np.linalg.inv(A)
        shift *= 2.0
    return np.eye(n)  # pragma: no cover


class _Evaluator:
    """Solves on a body normalized to ``W_mu = 1``, with a cache on ``h``."""

    def __init__(self, target: TargetMeasure, cfg: SolverConfig, opt: OptimizerConfig):
        self.cfg, self.opt = cfg, opt
        self.M = target.M
        w = target.weights
        self.S = np.flatnonzero(w > 0)
        self.theta = grid_angles(self.M)[self.S]
        self.w = w[self.S] / w[self.S].sum()
        self.ex = homogeneity_exponents(cfg.beta)
        self.cache: dict = {}
        self.solves = 0

    def width(self, h: np.ndarray) -> float:
        return 2.0 * float(self.w @ h)

    def normalize(self, h: np.ndarray):
        """Convexify, recenter and rescale to unit width; returns ``(body, h)``."""
        body = halfplane_intersection(self.theta, h)
        body, _ = recenter(body)
        h_new = body.support(self.theta)
        body = transform(body, 1.0 / self.width(h_new))
        return body, body.support(self.theta)

    def evaluate(self, h: np.ndarray):
        key = hashlib.sha1(np.round(h, 14).tobytes()).hexdigest()
        if key in self.cache:
            return self.cache[key]
        body, h = self.normalize(h)
        if body.support(self.theta).min() < self.opt.h_floor:
            raise CollapseDetected("minimum support after recentering fell below h_floor")
        s = self.opt.eval_scale
        field_ = solve_body(transform(body, s), self.cfg)
        self.solves += 1
        F = energy(field_, self.cfg).F / s**self.ex.alpha
        mu = body_measure(field_, transform(body, s), self.M).weights / s**self.ex.gamma
        out = (body, h, F, mu)
        self.cache[key] = out
        return out

    def gradient(self, h: np.ndarray, mu: np.ndarray) -> np.ndarray:
        """Gradient of ``log F - alpha log W`` in the support values on ``S``."""
        m = mu[self.S]
        return self.ex.alpha * (m / float(m @ h) - self.w / float(self.w @ h))

    def stationarity(self, mu: np.ndarray) -> float:
        m = mu[self.S]
        return float(np.abs(m / m.sum() - self.w).sum())


def solve_minkowski(
    target: TargetMeasure,
    cfg: SolverConfig,
    opt: OptimizerConfig = OptimizerConfig(),
    initial: ConvexBody | None = None,
    progress=None,
) -> MinkowskiSolution:
    """Projected, preconditioned gradient ascent for the constrained maximum.

    ``initial`` defaults to the disk of unit mean width.  ``progress`` is an
    optional callable receiving one dict per accepted iteration.
    """
    ev = _Evaluator(target, cfg, opt)
    if len(ev.S) < 3:
        raise DegenerateMeasure("target must charge at least 3 directions")
    P = _preconditioner(ev.theta)
    h0 = np.full(len(ev.S), 0.5) if initial is None else initial.support(ev.theta)
    body, h, F, mu = ev.evaluate(h0)
    F_trace = [F]
    trace = []
    step = opt.step0
    reason = "max_iter"
    t_start = time.perf_counter()
    for it in range(1, opt.max_iter + 1):
        stat = ev.stationarity(mu)
        if stat <= opt.residual_tol:
            reason = "stationary"
            break
        g = ev.gradient(h, mu)
        d = P @ g
        d *= h.mean() / np.abs(d).max()
        accepted = False
        while step >= opt.step_min:
            cand = ev.evaluate(h + step * d)
            if cand[2] > F:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            reason = "line search stalled"
            break
        body_n, h_n, F_n, mu_n = cand
        dF = (F_n - F) / F
        dh = float(np.abs(h_n - h).max() / h.mean())
        body, h, F, mu = body_n, h_n, F_n, mu_n
        F_trace.append(F)
        row = {"iteration": it, "F": F, "width": ev.width(h), "step": step, "stationarity": stat,
               "dF": dF, "dh": dh, "solves": ev.solves, "seconds": time.perf_counter() - t_start}
        trace.append(row)
        if progress is not None:
            progress(row)
        log.info("iter %d F=%.8e step=%.3g stat=%.3e", it, F, step, stat)
        step = min(2.0 * step, opt.step_max)
        if dF < opt.stop_tol_F and dh < opt.stop_tol_h:
            reason = "converged"
            break
    else:
        raise NonConvergence(f"no convergence in {opt.max_iter} iterations")

    # Lagrange multiplier: mass-weighted mean of mu_K / mu over charged bins
    tw = target.weights
    lam = float(mu[ev.S].sum() / tw[ev.S].sum())
    gamma = ev.ex.gamma
    t = lam ** (-1.0 / gamma)
    final, _ = recenter(transform(body, t))
    field_ = solve_body(final, cfg)
    mu_final = body_measure(field_, final, target.M)
    raw, scaled = residual(mu_final, target)
    return MinkowskiSolution(final, lam, t, raw, scaled, len(F_trace) - 1, F_trace, trace,
                             mu_final, reason)


def support_spread(body: ConvexBody, M: int = 256) -> float:
    """``(max h - min h) / mean h`` over the grid, after recentering."""
    h = recenter(body)[0].support(grid_angles(M))
    return float(np.ptp(h) / h.mean())
