from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from helpers import SEED
from snbump.asymptotics import (
    CONVENTIONS,
    PotentialParams,
    bump_points,
    closed_form_radius,
    degenerate_regime,
    energy_expansion,
    fit_interaction_constant,
    g_function,
    interaction_sum_check,
    log_exponent,
    optimal_radius,
    pair_interaction,
    pair_interaction_shell,
    radius_window,
    ring_sum,
    ring_sum_bounds,
    spacing_is_decreasing,
    target_radius_amplitude,
)
from snbump.exceptions import ConfigError, NoInteriorMax, SeparationTooSmall


def test_bump_points_geometry():
    b = bump_points(6, 10.0)
    assert b.centers.shape == (6, 3)
    assert np.allclose(np.linalg.norm(b.centers, axis=1), 10.0)
    assert b.min_distance == pytest.approx(2 * 10.0 * math.sin(math.pi / 6))
    assert b.distances.shape == (6,) and b.distances[0] == 0.0


def test_ring_sum_large_s():
    assert abs(ring_sum(10**6, 1.0).ratio - 1.0) < 0.02


@seed(SEED)
@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=50, max_value=5000), st.floats(min_value=0.5, max_value=1e4))
def test_ring_sum_between_integral_bounds(s, r):
    lo, hi = ring_sum_bounds(s, r)
    val = ring_sum(s, r).value
    assert lo <= val * (1 + 1e-12) and val <= hi * (1 + 1e-12)


@seed(SEED)
@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=3, max_value=2000), st.floats(min_value=0.1, max_value=1e3))
def test_ring_sum_scales_inversely_with_radius(s, r):
    assert ring_sum(s, r).value * r == pytest.approx(ring_sum(s, 1.0).value, rel=1e-12)


def test_pair_interaction_at_zero_is_a2(gs):
    assert pair_interaction(gs, 0.0) == pytest.approx(gs.A2, rel=1e-3)


def test_pair_interaction_quadrature_agrees_with_shell_formula(gs):
    for d in (0.5, 3.0, 8.0):
        assert pair_interaction(gs, d) == pytest.approx(pair_interaction_shell(gs, d), rel=1e-8)


def test_pair_interaction_monopole_law(gs):
    d = 10.0
    assert 0.95 <= d * pair_interaction(gs, d) / gs.A1**2 <= 1.05
    far = 60.0
    assert far * pair_interaction_shell(gs, far) / gs.A1**2 == pytest.approx(1.0, abs=1e-6)


def test_interaction_sum_requires_separation(gs):
    with pytest.raises(SeparationTooSmall):
        interaction_sum_check(gs, 64, 5.0)


def test_constant_fit_flags_the_candidate(gs):
    fit = fit_interaction_constant(gs, s_values=(64, 256, 1024))
    assert fit.match == "1/(8 pi^2)"
    assert abs(fit.deviations["1/(8 pi^2)"]) < 0.05
    assert "1/(8 pi^2)" in fit.flag_line()


def test_stationarity_at_closed_form_radius(gs):
    p = PotentialParams(a=1.3, m=0.6)
    for conv in CONVENTIONS:
        for s in (4, 10, 100):
            r = closed_form_radius(gs, p, s, conv)
            ex = energy_expansion(gs, p, s, r, conv)
            assert p.m * ex.term_pot == pytest.approx(ex.term_int, rel=1e-12)


def test_golden_section_matches_closed_form(gs):
    p = PotentialParams(a=1.0, m=0.5)
    opt = optimal_radius(gs, p, 8)
    assert opt.r_numeric == pytest.approx(opt.r_closed, rel=1e-6)
    assert opt.window.contains(opt.r_closed)
    assert opt.stationarity_gap < 1e-12


def test_closed_form_is_maximum_of_g(gs):
    p = PotentialParams(a=0.8, m=0.7)
    r = closed_form_radius(gs, p, 12)
    g0 = g_function(gs, p, 12, r)
    assert g0 > g_function(gs, p, 12, 0.99 * r)
    assert g0 > g_function(gs, p, 12, 1.01 * r)


@seed(SEED)
@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=3, max_value=500), st.floats(min_value=5.0, max_value=500.0),
       st.floats(min_value=0.5, max_value=0.9))
def test_target_radius_rule_roundtrip(s, r_star, m):
    class _G:  # only A1 enters the rule
        A1 = 88.098544338

    a = target_radius_amplitude(_G, s, r_star, m)
    assert closed_form_radius(_G, PotentialParams(a=a, m=m), s) == pytest.approx(r_star, rel=1e-10)


def test_window_rejects_nonpositive_lower_endpoint(gs):
    with pytest.raises(ConfigError):
        radius_window(gs, PotentialParams(), 6, alpha_relative=1.5)


def test_degenerate_regime_spacing_collapses(gs):
    rows = degenerate_regime(gs, PotentialParams(m=0.3), (10**3, 10**4, 10**5))
    assert spacing_is_decreasing(rows)
    for row in rows:
        assert row["r_bar"] == pytest.approx(row["r_bar_closed"], rel=1e-6)
    # growth exponent of r_bar in log s is 1/(1 - 2m)
    assert log_exponent(degenerate_regime(gs, PotentialParams(m=0.3), (10**3, 10**6, 10**9))) == pytest.approx(
        1.0 / (1.0 - 0.6), rel=1e-3)


def test_degenerate_regime_needs_small_m(gs):
    with pytest.raises(ConfigError):
        degenerate_regime(gs, PotentialParams(m=0.6), (1000,))


def test_no_interior_max_is_reported(gs):
    from snbump.asymptotics import _golden_max

    with pytest.raises(NoInteriorMax):
        _golden_max(lambda t: t, 0.0, 1.0)


def test_potential_validation():
    with pytest.raises(ConfigError):
        PotentialParams(m=1.2)
    with pytest.raises(ConfigError):
        PotentialParams(a=-1.0)
    p = PotentialParams(V0=1.0, a=2.0, m=0.5)
    r = np.array([1e3])
    assert (p.V(r) - 1.0) * r**0.5 == pytest.approx(2.0, rel=1e-5)
