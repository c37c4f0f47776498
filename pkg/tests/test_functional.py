import math

import numpy as np
import pytest

from sublinear_minkowski import (
    disk,
    energy,
    first_variation,
    homogeneity_exponents,
    isoperimetric_gap,
    minkowski_sum,
    radial_oracle,
    random_convex_body,
    regular_polygon,
    solve_body,
    square,
    transform,
)
from sublinear_minkowski.config import pinned
from sublinear_minkowski.functional import euler_gap, functional, isoperimetric_ratio


def test_exponents_examples():
    ex = homogeneity_exponents(0.5, 2)
    assert (ex.alpha, ex.gamma, ex.variation_factor) == (8.0, 7.0, 3.0)
    lim = homogeneity_exponents(1e-12, 2)
    assert lim.alpha == pytest.approx(4.0)
    assert lim.gamma == pytest.approx(3.0)
    assert lim.variation_factor == pytest.approx(1.0)
    for b in np.random.default_rng(0).uniform(0.01, 0.99, 20):
        e = homogeneity_exponents(b)
        assert e.gamma == e.alpha - 1
        assert min(e.alpha, e.gamma, e.variation_factor) > 0
    with pytest.raises(ValueError):
        homogeneity_exponents(1.0)


def test_energy_report(disk_field, cfg):
    e = energy(disk_field, cfg)
    assert e.F > 0
    assert e.identity_gap <= 0.01
    assert e.I_energy == pytest.approx(0.5 * e.F - e.F_dual / 1.5)


def test_disk_energy_against_oracle(disk_field, cfg):
    F = energy(disk_field, cfg).F
    s = radial_oracle(1.0, 2, 0.5, samples=20001)
    quad = 2 * math.pi * np.trapezoid(s.dphi**2 * s.r, s.r)
    assert F == pytest.approx(quad, rel=0.01)
    assert F == pytest.approx(pinned(0.5)["F_ball"], rel=0.01)


def test_translation_invariance(cfg):
    K = random_convex_body(2)
    assert functional(transform(K, 1.0, (2.0, -1.0)), cfg) == pytest.approx(functional(K, cfg), rel=1e-3)


def test_scaling_slope(cfg):
    K = square()
    ts = np.array([0.5, 1.0, 2.0])
    Fs = np.array([functional(transform(K, t), cfg) for t in ts])
    slope = np.polyfit(np.log(ts), np.log(Fs), 1)[0]
    assert slope == pytest.approx(8.0, rel=0.02)
    assert Fs[2] / Fs[1] == pytest.approx(256.0, rel=0.02)


def test_monotone_under_inclusion(cfg):
    for seed in range(3):
        K = random_convex_body(seed)
        assert functional(transform(K, 0.8), cfg) <= functional(K, cfg)
        assert functional(K, cfg) <= functional(minkowski_sum(K, disk(0.1)), cfg)


def test_continuity_from_below(cfg):
    Fs = [functional(regular_polygon(n), cfg) for n in (8, 16, 32, 64, 128)]
    assert all(b > a for a, b in zip(Fs, Fs[1:]))
    F_ball = pinned(0.5)["F_ball"]
    assert Fs[-1] < F_ball
    assert (F_ball - Fs[-1]) / F_ball <= 0.01


def test_first_variation_square_disk(cfg):
    r = first_variation(square(), disk(), cfg, t_step=1e-3, levels=2)
    assert r.rel_error <= 0.03
    assert np.isfinite(r.formula_side) and np.isfinite(r.fd_side)
    assert r.steps == (1e-3, 5e-4)


def test_first_variation_self_is_euler(cfg):
    K = random_convex_body(4)
    r = first_variation(K, K, cfg, t_step=1e-3, levels=2)
    F = functional(K, cfg)
    assert r.formula_side == pytest.approx(8 * F, rel=0.03)
    assert r.fd_side == pytest.approx(8 * F, rel=0.03)


def test_first_variation_translation_of_L(cfg):
    K, L = random_convex_body(5), random_convex_body(6)
    a = first_variation(K, L, cfg, t_step=1e-3, levels=1)
    b = first_variation(K, transform(L, 1.0, (0.5, -0.25)), cfg, t_step=1e-3, levels=1)
    # h_L changes by x0 . xi, which pairs to (mass * centroid) . x0
    assert b.formula_side == pytest.approx(a.formula_side, rel=1e-2)


@pytest.mark.parametrize("name", ["square", "disk", "random"])
def test_euler_identity(name, cfg):
    K = {"square": square(), "disk": disk(), "random": random_convex_body(8)}[name]
    assert euler_gap(solve_body(K, cfg), K, cfg) <= 0.03


def test_isoperimetric_examples(cfg):
    F_ball = pinned(0.5)["F_ball"]
    assert abs(isoperimetric_gap(disk(), cfg, F_ball)) <= 0.01 * F_ball
    assert isoperimetric_gap(square(), cfg, F_ball) > 0
    for seed in range(5):
        K = random_convex_body(seed)
        F = functional(K, cfg)
        assert isoperimetric_gap(K, cfg, F_ball, F=F) >= -0.01 * F


def test_isoperimetric_ratio_at_most_one(cfg):
    F_ball = pinned(0.5)["F_ball"]
    K = random_convex_body(12)
    from sublinear_minkowski import SurfaceMeasure, mean_width

    W = mean_width(K, SurfaceMeasure.uniform(256))
    assert isoperimetric_ratio(functional(K, cfg), W, F_ball, 8.0) <= 1.0
