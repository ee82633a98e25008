from __future__ import annotations

import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from helpers import SEED
from snbump.asymptotics import PotentialParams, target_radius_amplitude
from snbump.exceptions import ActivationNotReached, ConfigError, ContractionFailed
from snbump.fields import CartesianSpace, GridSpec, build_grid
from snbump.reduction import (
    MultiBumpSolver,
    apply_L,
    build_problem,
    constraint_set,
    error_term,
    nonlinear_N,
    nonlinear_N_prime,
    project_constraint,
    project_dual,
    quadratic_form_L,
    scan_and_build,
    solve_w,
    taylor_identity_check,
)
from snbump.ringcell import RingCell

SPACES = ("ring4", "cart2", "cart4")


@pytest.fixture(scope="module")
def params(gs):
    return PotentialParams(a=target_radius_amplitude(gs, 4, 32.0, 0.5), m=0.5)


@pytest.fixture(scope="module")
def problems(gs, params):
    out = {}
    out["ring4"] = build_problem(RingCell(4, 37.0, params, h=0.5, W=8.0), gs)
    for s, r in ((2, 12.0), (4, 14.0)):
        sp = CartesianSpace(build_grid(GridSpec.desk(r, h=0.5, margin=8.0)), params, s=s)
        out[f"cart{s}"] = build_problem(sp, gs, r)
    return out


def _smooth(sp, rng, amp):
    f = sp.exact_symmetrize(sp.precond(rng.standard_normal(sp.shape)))
    return amp * f / np.max(np.abs(f))


@pytest.mark.parametrize("name", SPACES)
def test_taylor_identity_is_exact(problems, name):
    prob = problems[name]
    rng = np.random.default_rng(SEED)
    for amp in (0.001, 0.01, 0.1):
        w = _smooth(prob.space, rng, amp * np.max(prob.U))
        tc = taylor_identity_check(prob, w)
        assert abs(tc["delta1"]) <= 1e-10 * tc["scale"]
        assert abs(tc["delta2"]) <= tc["delta2_bound"] * (1 + 1e-8) + 1e-14


@pytest.mark.parametrize("name", SPACES)
def test_nonlinear_derivative_has_second_order_remainder(problems, name):
    prob = problems[name]
    sp = prob.space
    rng = np.random.default_rng(SEED + 1)
    w = _smooth(sp, rng, 0.1 * np.max(prob.U))
    v = _smooth(sp, rng, 0.1 * np.max(prob.U))
    g = sp.dot(nonlinear_N_prime(prob, w), v)
    errs = [abs(nonlinear_N(prob, w + t * v) - nonlinear_N(prob, w) - t * g) for t in (0.01, 0.005)]
    assert math.log2(errs[0] / errs[1]) >= 1.9


@pytest.mark.parametrize("name", SPACES)
def test_projections_preserve_the_constraint(problems, name):
    prob = problems[name]
    sp = prob.space
    cs = constraint_set(prob)
    assert abs(cs.z_value) > 0
    rng = np.random.default_rng(SEED + 2)
    v = _smooth(sp, rng, 1.0)
    pv = project_constraint(sp, v, cs)
    assert abs(cs.value(sp, pv)) <= 1e-8 * math.sqrt(sp.dot(pv, pv)) * cs.g_norm
    # both projectors are idempotent and adjoint to each other
    assert np.allclose(project_constraint(sp, pv, cs), pv, atol=1e-13)
    f = _smooth(sp, rng, 1.0)
    assert sp.dot(project_dual(sp, f, cs), v) == pytest.approx(sp.dot(f, pv), rel=1e-10)


@pytest.mark.parametrize("name", SPACES)
def test_second_variation_is_symmetric(problems, name):
    prob = problems[name]
    sp = prob.space
    rng = np.random.default_rng(SEED + 3)
    a, b = _smooth(sp, rng, 1.0), _smooth(sp, rng, 1.0)
    lab = sp.dot(apply_L(prob, a), b)
    lba = sp.dot(a, apply_L(prob, b))
    assert abs(lab - lba) <= 1e-13 * (abs(lab) + abs(lba))
    assert quadratic_form_L(prob, a) == pytest.approx(sp.dot(apply_L(prob, a), a), rel=1e-12)


def test_error_term_on_discrete_profile_is_the_gradient(problems):
    et = error_term(problems["ring4"])
    assert et.bump_residual_dual_norm < 1e-6 * et.dual_norm + 1e-10
    assert et.gradient_dual_norm == pytest.approx(et.dual_norm, rel=1e-4)


def test_solve_w_contracts_and_keeps_constraint(problems):
    prob = problems["ring4"]
    st = solve_w(prob)
    assert st.converged
    assert st.kappa_history and max(st.kappa_history) <= 0.5
    assert st.constraint_violation <= 1e-8
    assert st.zeta_estimate > 0.05
    assert st.activated
    # the corrected field lowers the residual in the constrained directions
    sp = prob.space
    cs = constraint_set(prob)
    res = project_dual(sp, sp.symmetrize(prob.gradient(prob.U + st.w)), cs)
    e = project_dual(sp, sp.symmetrize(prob.gradient()), cs)
    assert sp.norm(sp.riesz_solve(res)) < 1e-6 * sp.norm(sp.riesz_solve(e))


def test_solve_w_reports_divergence(problems):
    prob = problems["ring4"]
    with pytest.raises(ContractionFailed) as info:
        solve_w(prob, forcing=100.0 * prob.space.h_apply(prob.U))
    assert len(info.value.kappa_history) >= 2


def test_strict_activation(problems):
    with pytest.raises(ActivationNotReached):
        solve_w(problems["ring4"], activation=1e-12, strict_activation=True)


def test_scan_rejects_small_s(gs, params):
    with pytest.raises(ConfigError):
        scan_and_build(gs, params, 2)


def test_estimator_api():
    est = MultiBumpSolver(s=6, h=0.5)
    assert clone(est).get_params()["s"] == 6
    with pytest.raises(NotFittedError):
        est.predict(np.zeros((1, 3)))
