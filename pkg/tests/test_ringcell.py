from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from helpers import SEED
from snbump.asymptotics import PotentialParams
from snbump.exceptions import ConfigError, RingOutOfGrid
from snbump.fields import CartesianSpace, GridSpec, build_grid
from snbump.ringcell import RingCell, discrete_bump, min_ring_radius

P = PotentialParams(a=1.0, m=0.5)


@pytest.fixture(scope="module")
def cell():
    return RingCell(4, 20.0, P, h=0.5, W=8.0)


def test_wedge_radius():
    assert min_ring_radius(4, 9.0) == pytest.approx(18.0)
    assert min_ring_radius(6, 9.0) == pytest.approx(9.0 * (1 + math.sqrt(3)))
    with pytest.raises(RingOutOfGrid):
        RingCell(6, 20.0, P, W=9.0)
    with pytest.raises(ConfigError):
        RingCell(4, 20.0, P, h=1.0, W=5.0)
    with pytest.raises(ConfigError):
        RingCell(4, 20.0, P, profile="spline")


def test_operator_is_symmetric(cell):
    @seed(SEED)
    @settings(max_examples=8, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def check(k):
        f, g = np.random.default_rng(k).standard_normal((2, *cell.shape))
        a, b = cell.dot(f, cell.t_apply(g)), cell.dot(cell.t_apply(f), g)
        assert abs(a - b) <= 1e-12 * (abs(a) + abs(b))

    check()


def test_symmetrize_is_an_orthogonal_projector(cell, rng):
    f, g = rng.standard_normal((2, *cell.shape))
    pf = cell.symmetrize(f)
    assert np.array_equal(cell.symmetrize(pf), pf)
    assert cell.dot(pf, g) == pytest.approx(cell.dot(f, cell.symmetrize(g)), rel=1e-12)


def test_energy_matches_full_grid(gs):
    s, r, h = 4, 18.0, 0.3
    rc = RingCell(s, r, P, h=h, W=9.0, profile="interpolated")
    U_cell = rc.bump_sums(gs)[0]
    grid = build_grid(GridSpec.desk(r, h=h, margin=9.0))
    cart = CartesianSpace(grid, P, s=s)
    U_full = cart.bump_sums(gs, r)[0]
    assert rc.energy(U_cell) == pytest.approx(cart.energy(U_full), rel=5e-4)


def test_far_field_matches_direct_image_sum(gs):
    s, r = 4, 24.0
    rc = RingCell(s, r, P, h=0.5, W=8.0, profile="interpolated")
    a1, a2, a3 = rc.local()
    f = np.exp(-(a1**2 + a2**2 + a3**2))
    T = rc.t_apply(f)
    # images of a compact source act like point masses far away
    q = float(np.sum(f)) * rc.dV
    x = np.array([r, 0.0, 0.0])
    far = sum(q / (4 * math.pi * np.linalg.norm(x - np.array([r * math.cos(t), r * math.sin(t), 0.0])))
              for t in 2 * math.pi * np.arange(1, s) / s)
    c = tuple(n // 2 for n in rc.shape)
    near = rc.near_t_apply(f)[c]
    assert T[c] - near == pytest.approx(far, rel=1e-6)


def test_discrete_bump_is_a_discrete_ground_state(gs):
    ub = discrete_bump(gs, 0.5, 8.0)
    sp = RingCell(1, 0.0, PotentialParams.flat(), h=0.5, W=8.0, check_wedge=False, profile="interpolated")
    res = sp.residual(ub)
    assert np.max(np.abs(res)) < 1e-8 * np.max(ub)
    assert np.all(ub > 0)
    assert np.array_equal(ub, ub[::-1]) or np.allclose(ub, ub[::-1], atol=1e-14)
    # cached copy is returned unchanged and not aliased
    again = discrete_bump(gs, 0.5, 8.0)
    again[0, 0, 0] = -1.0
    assert discrete_bump(gs, 0.5, 8.0)[0, 0, 0] > 0


def test_metadata_describes_the_cell(cell):
    meta = cell.metadata()
    assert meta["kind"] == "ringcell" and meta["symmetry_s"] == 4
    assert meta["n1"] == cell.shape[0]
    assert meta["origin"][0] == pytest.approx(cell.r - cell.W)
