from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st
from scipy import integrate, special

from helpers import SEED
from snbump.asymptotics import BumpConfiguration, PotentialParams, bump_points
from snbump.exceptions import BoundaryMassTooLarge, BudgetExceeded, ConfigError, RingOutOfGrid
from snbump.fields import (
    CartesianSpace,
    Field,
    GridSpec,
    assemble_ansatz,
    boundary_ratio,
    build_grid,
    cell_average_inverse_distance,
    energy_J,
    lattice_self_weight,
    neg_laplacian,
    residual_strong,
    symmetrize,
    t_apply,
)


def _grid(L=8.0, h=0.25, Lz=None, **kw):
    Lz = L if Lz is None else Lz
    return build_grid(GridSpec(half_extents=(L, L, Lz), spacings=(h, h, h), margin=0.0, **kw))


@pytest.fixture(scope="module")
def small():
    return _grid(L=4.0, h=0.5)


def _gaussian(grid, sigma=1.0):
    r = grid.radius()
    f = np.exp(-(r**2) / (2 * sigma**2))
    mass = (2 * math.pi * sigma**2) ** 1.5
    with np.errstate(invalid="ignore", divide="ignore"):
        T = mass / (4 * math.pi * r) * special.erf(r / (math.sqrt(2) * sigma))
    T[r == 0] = mass / (4 * math.pi) * math.sqrt(2 / math.pi) / sigma
    return f, T


def test_newtonian_potential_of_gaussian():
    g = _grid(h=0.25)
    f, T = _gaussian(g)
    err = np.max(np.abs(t_apply(Field(g, f)).values - T)) / np.max(T)
    assert err < 1e-3


def test_cell_average_singular_rule_is_coarser():
    g = _grid(h=0.25, singular="cell-average")
    f, T = _gaussian(g)
    err_avg = np.max(np.abs(t_apply(Field(g, f)).values - T)) / np.max(T)
    g2 = _grid(h=0.25)
    err_cor = np.max(np.abs(t_apply(Field(g2, f)).values - T)) / np.max(T)
    assert err_cor < err_avg


def test_singular_weights():
    assert lattice_self_weight(1.0, 1.0, 1.0) == pytest.approx(2.8372974794806, rel=1e-12)
    assert lattice_self_weight(0.5, 0.5, 0.5) == pytest.approx(2 * 2.8372974794806, rel=1e-12)
    avg = cell_average_inverse_distance(1.0, 1.0, 1.0)
    assert avg == pytest.approx(2.3800772, rel=1e-6)
    ref, _ = integrate.tplquad(lambda z, y, x: 1 / math.sqrt(x * x + y * y + z * z), 0, 0.5, 0, 0.5, 0, 0.5)
    assert avg == pytest.approx(8 * ref, rel=1e-6)
    assert cell_average_inverse_distance(0.3, 0.4, 0.5) == pytest.approx(
        8 * integrate.tplquad(lambda z, y, x: 1 / math.sqrt(x * x + y * y + z * z),
                              0, 0.15, 0, 0.2, 0, 0.25)[0] / 0.06, rel=1e-6)


def test_boundary_mass_guard():
    g = _grid(L=4.0, h=0.5)
    with pytest.raises(BoundaryMassTooLarge):
        t_apply(Field(g, np.ones(g.shape)))
    assert boundary_ratio(np.zeros(3)) == 0.0


def test_grid_guards():
    with pytest.raises(ConfigError):
        _grid(L=2.0, h=0.5)
    with pytest.raises(RingOutOfGrid):
        build_grid(GridSpec(half_extents=(20.0, 20.0, 9.0), spacings=(0.5,) * 3, ring_radius=20.0, margin=9.0))
    with pytest.raises(BudgetExceeded):
        build_grid(GridSpec.desk(40.0, h=0.1, budget_bytes=1e8))
    with pytest.raises(ConfigError):
        GridSpec(padding=1)


def test_newton_operator_is_symmetric(small):
    sp = CartesianSpace(small, PotentialParams.flat())

    @seed(SEED)
    @settings(max_examples=10, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def check(k):
        rng = np.random.default_rng(k)
        f, g = rng.standard_normal((2, *small.shape))
        a, b = sp.dot(f, sp.t_apply(g)), sp.dot(sp.t_apply(f), g)
        assert abs(a - b) <= 1e-12 * (abs(a) + abs(b))
        assert sp.dot(f, sp.t_apply(f)) > 0

    check()


def test_laplacian_is_symmetric_positive(small, rng):
    f, g = rng.standard_normal((2, *small.shape))
    a = np.sum(f * neg_laplacian(g, small.h))
    b = np.sum(g * neg_laplacian(f, small.h))
    assert a == pytest.approx(b, rel=1e-12)
    assert np.sum(f * neg_laplacian(f, small.h)) > 0


@pytest.mark.parametrize("s", [2, 3, 4, 6])
def test_symmetrize_idempotent_on_exact_group(small, s):
    sp = CartesianSpace(small, PotentialParams.flat(), s=s)

    @seed(SEED)
    @settings(max_examples=5, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def check(k):
        f = np.random.default_rng(k).standard_normal(small.shape)
        once = sp.exact_symmetrize(f)
        assert np.allclose(sp.exact_symmetrize(once), once, atol=1e-14)
        assert np.allclose(once, once[:, ::-1, :]) and np.allclose(once, once[:, :, ::-1])

    check()


def test_interpolating_symmetrizer_fixes_ring_fields(gs):
    g = _grid(L=14.0, h=0.25, Lz=6.0)
    an = assemble_ansatz(gs, bump_points(6, 5.0), g)
    sym = symmetrize(an.U_r, 6)
    assert sym.symmetry == 6
    assert np.max(np.abs(sym.values - an.U_r.values)) < 2e-2 * np.max(an.U_r.values)


def test_energy_gradient_is_strong_residual(small, rng):
    sp = CartesianSpace(small, PotentialParams(a=0.5))
    r = small.radius()
    u = np.exp(-r)
    v = rng.standard_normal(small.shape) * np.exp(-r)
    t = 1e-4
    fd = (sp.energy(u + t * v) - sp.energy(u - t * v)) / (2 * t)
    assert fd == pytest.approx(sp.dot(sp.residual(u), v), rel=1e-7)


def test_single_bump_energy_and_residual(gs):
    g = _grid(L=9.0, h=0.3)
    an = assemble_ansatz(gs, BumpConfiguration.single(), g)
    J = energy_J(an.U_r, PotentialParams.flat())
    assert J == pytest.approx(gs.A2 / (32 * math.pi), rel=3e-3)
    res = residual_strong(an.U_r, PotentialParams.flat())
    peak = np.max(np.abs(res.values))
    assert peak < 10 * 0.3**2 * np.max(an.U_r.values) * 2.0
    assert peak < 0.05


def test_energy_converges_quadratically(gs):
    errs = []
    for h in (0.6, 0.3):
        g = _grid(L=9.0, h=h)
        an = assemble_ansatz(gs, BumpConfiguration.single(), g)
        errs.append(abs(energy_J(an.U_r, PotentialParams.flat()) / (gs.A2 / (32 * math.pi)) - 1))
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_ansatz_needs_margin(gs):
    g = build_grid(GridSpec(half_extents=(9.0, 9.0, 9.0), spacings=(0.5,) * 3, margin=8.0))
    with pytest.raises(RingOutOfGrid):
        assemble_ansatz(gs, bump_points(4, 5.0), g)


def test_field_validation(small):
    with pytest.raises(ValueError):
        Field(small, np.zeros(3))
    with pytest.raises(ValueError):
        Field(small, np.full(small.shape, np.nan))
