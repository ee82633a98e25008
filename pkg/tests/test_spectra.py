from __future__ import annotations

import numpy as np
import pytest

from snbump.exceptions import ConfigError, KernelCountMismatch
from snbump.spectra import (
    _dense,
    _matvec,
    nondegeneracy_report,
    sector_eigenpairs,
    sector_operator,
    zero_tolerance,
)


@pytest.fixture(scope="module")
def report(gs):
    return nondegeneracy_report(gs)


def test_only_translation_sector_has_a_zero_mode(report):
    assert report.passed
    assert report.sector(1).n_small == 1
    for ell in (0, 2, 3):
        assert report.sector(ell).n_small == 0
        assert report.smallest_abs(ell) > 100 * report.tol


def test_kernel_is_the_radial_derivative(report):
    assert report.sector(1).kernel_overlap >= 0.999


def test_eigen_residuals_small(report):
    for sec in report.sectors:
        assert max(sec.residuals) < 1e-8


def test_truncation_insensitive(report):
    t30, t40 = report.truncation[30.0], report.truncation[40.0]
    for ell in (0, 2, 3):
        assert t30[ell] == pytest.approx(t40[ell], rel=1e-3)


def test_discrete_operator_is_symmetric(gs, rng):
    op = sector_operator(gs, 2, h=0.05, R=20.0)
    n = op.interior.size
    x, y = rng.standard_normal(n), rng.standard_normal(n)
    lhs = x @ _matvec(op, y)
    rhs = y @ _matvec(op, x)
    assert abs(lhs - rhs) <= 1e-10 * (abs(lhs) + abs(rhs))
    D = _dense(op)
    assert np.allclose(D @ y, _matvec(op, y), rtol=1e-9, atol=1e-9)


def test_eigensolvers_agree(gs):
    op = sector_operator(gs, 0, h=0.05, R=20.0)
    w_dense, _ = sector_eigenpairs(op, 3, "dense")
    w_sparse, _ = sector_eigenpairs(op, 3, "shift-invert")
    assert np.allclose(np.sort(np.abs(w_dense)), np.sort(np.abs(w_sparse)), rtol=1e-8)


def test_wrong_tolerance_is_reported(gs):
    with pytest.raises(KernelCountMismatch) as info:
        nondegeneracy_report(gs, tol=0.5)
    assert info.value.ell == 0
    rep = nondegeneracy_report(gs, tol=0.5, strict=False)
    assert not rep.passed and rep.failures


def test_zero_tolerance_scaling():
    assert zero_tolerance(0.01, 1.0) == pytest.approx(4 * zero_tolerance(0.005, 1.0))


def test_rejects_truncation_beyond_profile(gs):
    with pytest.raises(ConfigError):
        sector_operator(gs, 0, R=100.0)
