from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse.linalg as spla
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from helpers import SEED
from snbump.exceptions import InnerSolveStalled
from snbump.krylov import minres


def _indefinite(n, rng, gap=0.05):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    ev = rng.uniform(gap, 3.0, n) * rng.choice([-1.0, 1.0], n)
    return (Q * ev) @ Q.T, ev


def test_agrees_with_scipy(rng):
    A, _ = _indefinite(60, rng)
    b = rng.standard_normal(60)
    ours = minres(lambda v: A @ v, b, dot=np.dot, rtol=1e-12, maxiter=400)
    ref, info = spla.minres(A, b, rtol=1e-12, maxiter=400)
    assert ours.converged and info == 0
    assert np.allclose(ours.x, ref, atol=1e-8)
    assert np.linalg.norm(A @ ours.x - b) <= 1e-9 * np.linalg.norm(b)


def test_preconditioned_solve_with_custom_inner_product(rng):
    n = 40
    w = rng.uniform(0.5, 2.0, n)
    A, _ = _indefinite(n, rng)
    # operator symmetric in <x, y> = sum w x y
    op = lambda v: (A @ v) / w  # noqa: E731
    dot = lambda x, y: float(np.sum(w * x * y))  # noqa: E731
    d = np.abs(np.diag(A)) + 1.0
    res = minres(op, rng.standard_normal(n), dot=dot, M=lambda f: f / d, rtol=1e-11, maxiter=500)
    assert res.converged
    assert res.relative_residual <= 1e-11


@seed(SEED)
@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_harmonic_ritz_values_bound_the_smallest_eigenvalue(k):
    rng = np.random.default_rng(k)
    A, ev = _indefinite(30, rng)
    res = minres(lambda v: A @ v, rng.standard_normal(30), dot=np.dot, rtol=1e-10, maxiter=200)
    assert res.harmonic_ritz_min >= np.min(np.abs(ev)) * (1 - 1e-6)
    assert np.all(np.abs(res.ritz_values()) <= np.max(np.abs(ev)) * (1 + 1e-8))


def test_zero_rhs_returns_immediately():
    res = minres(lambda v: v, np.zeros(5), dot=np.dot)
    assert res.converged and res.iterations == 0 and not res.x.any()


def test_stall_is_reported_with_ritz_estimate(rng):
    A, _ = _indefinite(200, rng, gap=1e-6)
    with pytest.raises(InnerSolveStalled) as info:
        minres(lambda v: A @ v, rng.standard_normal(200), dot=np.dot, rtol=1e-14, maxiter=20)
    assert np.isfinite(info.value.ritz_min)
    res = minres(lambda v: A @ v, rng.standard_normal(200), dot=np.dot, rtol=1e-14, maxiter=20,
                 raise_on_stall=False)
    assert not res.converged and res.iterations == 20


def test_rejects_indefinite_preconditioner(rng):
    with pytest.raises(ValueError):
        minres(lambda v: v, rng.standard_normal(4), dot=np.dot, M=lambda f: -f)
