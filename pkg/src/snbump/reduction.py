"""Discrete Lyapunov–Schmidt reduction around the ring ansatz ``U_r``.

For a fixed radius the correction ``w`` solves the projected equation

    Pi* (e + L w + N'(w)) = 0,    c(w) = 0,

where ``e = J_h'(U_r)`` is the discrete gradient at the ansatz, ``L`` the
second variation, ``N'`` the cubic remainder and ``c`` the symmetric
constraint functional.  Because ``J_h`` is a quartic polynomial in ``u``
these pieces add up to ``J_h'(U_r + w)`` exactly.  The reduced energy
``F(r) = J_h(U_r + w(r))`` is then maximized over the radius window.

Everything here is written against a space object (``CartesianSpace`` or
``RingCell``) providing ``dot``, ``h_apply``, ``t_apply``, ``symmetrize``,
``precond``, ``riesz_solve`` and ``bump_sums``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import __version__
from .asymptotics import PotentialParams, closed_form_radius, radius_window, target_radius_amplitude
from .exceptions import (
    ActivationNotReached,
    ConfigError,
    ContractionFailed,
    DegenerateConstraint,
    MaximizerOnBoundary,
    ResidualTooLarge,
)
from .krylov import minres
from .radial import GroundState
from .ringcell import RingCell

__all__ = [
    "RingProblem",
    "ConstraintSet",
    "ErrorTerm",
    "ReductionState",
    "SolutionCertificate",
    "build_problem",
    "error_term",
    "apply_L",
    "quadratic_form_L",
    "constraint_set",
    "project_constraint",
    "project_dual",
    "nonlinear_N",
    "nonlinear_N_prime",
    "solve_w",
    "taylor_identity_check",
    "scan_and_build",
    "MultiBumpSolver",
]


@dataclass
class RingProblem:
    """Ansatz data on a space at radius ``r``."""

    space: object
    r: float
    U: np.ndarray
    Z: np.ndarray
    psi_u: np.ndarray  # sum_i Psi_i U_i
    g_c: np.ndarray
    TU2: np.ndarray  # T[U_r^2]

    @property
    def s(self) -> int:
        return self.space.symmetry_order

    def gradient(self, u=None) -> np.ndarray:
        """``J_h'(u) = (-Lap_h + V) u - T[u^2] u / 2``; ``u = U_r`` by default."""
        if u is None:
            return self.space.h_apply(self.U) - 0.5 * self.TU2 * self.U
        return self.space.residual(u)

    def energy(self, w=None) -> float:
        return self.space.energy(self.U if w is None else self.U + w)


def build_problem(space, gs: GroundState, r: float | None = None) -> RingProblem:
    r = getattr(space, "r", None) if r is None else r
    if r is None:
        raise ConfigError("radius required")
    U, Z, PU, gc = space.bump_sums(gs, r)
    return RingProblem(space=space, r=float(r), U=U, Z=Z, psi_u=PU, g_c=gc, TU2=space.t_apply(U * U))


@dataclass
class ErrorTerm:
    e_strong: np.ndarray
    dual_norm: float
    gradient_dual_norm: float
    bump_residual_dual_norm: float


def _dual_norm(space, f) -> float:
    return math.sqrt(max(space.dot(f, space.riesz_solve(f)), 0.0))


def error_term(problem: RingProblem) -> ErrorTerm:
    """``e = (V - 1) U_r + 1/2 (sum_i T[U_i^2] U_i - T[U_r^2] U_r)`` and its dual norm.

    Also reports the dual norm of the discrete gradient ``J_h'(U_r)``
    (which drives the iteration) and of their difference, the discrete
    residual of the interpolated bumps.
    """
    sp = problem.space
    e = (sp.V - 1.0) * problem.U + problem.psi_u - 0.5 * problem.TU2 * problem.U
    e = sp.symmetrize(e)
    grad = problem.gradient()
    return ErrorTerm(e_strong=e, dual_norm=_dual_norm(sp, e), gradient_dual_norm=_dual_norm(sp, grad),
                     bump_residual_dual_norm=_dual_norm(sp, grad - e))


def apply_L(problem: RingProblem, psi: np.ndarray) -> np.ndarray:
    """``-Lap_h psi + V psi - T[U_r^2] psi / 2 - T[U_r psi] U_r``."""
    sp = problem.space
    return sp.h_apply(psi) - 0.5 * problem.TU2 * psi - sp.t_apply(problem.U * psi) * problem.U


def quadratic_form_L(problem: RingProblem, psi: np.ndarray) -> float:
    """``int |grad psi|^2 + V psi^2 - 1/2 T[U^2] psi^2 - T[U psi] U psi`` from forward differences."""
    sp = problem.space
    grad2 = 0.0
    for ax, hh in enumerate(sp.h):
        pad = [(0, 0)] * 3
        pad[ax] = (1, 1)
        d = np.diff(np.pad(psi, pad), axis=ax) / hh
        grad2 += float(np.sum(d * d))
    grad2 *= sp.weight * sp.dV
    rest = sp.dot(sp.V * psi - 0.5 * problem.TU2 * psi, psi) - sp.dot(sp.t_apply(problem.U * psi), problem.U * psi)
    return grad2 + rest


def nonlinear_N(problem: RingProblem, w: np.ndarray) -> float:
    """``-1/2 int T[w^2] w U_r - 1/8 int T[w^2] w^2``."""
    sp = problem.space
    Tw2 = sp.t_apply(w * w)
    return -0.5 * sp.dot(Tw2 * w, problem.U) - 0.125 * sp.dot(Tw2, w * w)


def nonlinear_N_prime(problem: RingProblem, w: np.ndarray) -> np.ndarray:
    """``-T[w U_r] w - 1/2 T[w^2] (U_r + w)``."""
    sp = problem.space
    return -sp.t_apply(w * problem.U) * w - 0.5 * sp.t_apply(w * w) * (problem.U + w)


@dataclass
class ConstraintSet:
    g_c: np.ndarray
    g_hat: np.ndarray
    c_ghat: float
    g_norm: float  # L2 norm of g_c
    z_value: float  # c(Z), nonzero for a meaningful constraint

    def value(self, space, v) -> float:
        return space.dot(self.g_c, v)


def constraint_set(problem: RingProblem, rtol: float = 1e-12) -> ConstraintSet:
    sp = problem.space
    g = problem.g_c
    g_hat = sp.riesz_solve(g, rtol=rtol)
    c_ghat = sp.dot(g, g_hat)
    g2 = sp.dot(g, g)
    if not c_ghat > 1e-12 * g2:
        raise DegenerateConstraint(f"c(g_hat) = {c_ghat:.3e} is not above 1e-12 |g_c|^2 = {1e-12 * g2:.3e}")
    return ConstraintSet(g_c=g, g_hat=g_hat, c_ghat=c_ghat, g_norm=math.sqrt(g2),
                         z_value=sp.dot(g, problem.Z))


def project_constraint(space, v: np.ndarray, cs: ConstraintSet) -> np.ndarray:
    """``v - (c(v)/c(g_hat)) g_hat``; the result satisfies ``c = 0``."""
    return v - (cs.value(space, v) / cs.c_ghat) * cs.g_hat


def project_dual(space, f: np.ndarray, cs: ConstraintSet) -> np.ndarray:
    """Adjoint projection ``f - g_c <g_hat, f>/c(g_hat)``; kills the multiplier direction."""
    return f - cs.g_c * (space.dot(cs.g_hat, f) / cs.c_ghat)


@dataclass
class ReductionState:
    r: float
    w: np.ndarray
    w_norm: float
    w_norms: list
    kappa_history: list
    iterations: int
    inner_iterations: list
    zeta_estimate: float
    error_dual_norm: float
    activation_ratio: float
    activated: bool
    constraint_violation: float
    converged: bool
    F: float = float("nan")


def solve_w(problem: RingProblem, cs: ConstraintSet | None = None, *, tol: float = 1e-8, max_iter: int = 30,
            forcing: np.ndarray | None = None, w0: np.ndarray | None = None, inner_rtol: float = 1e-9,
            activation: float = 0.1, strict_activation: bool = False,
            inner_maxiter: int = 400) -> ReductionState:
    """Fixed-point iteration ``w <- -L^-1 Pi* (e + N'(w))`` on the constrained subspace.

    ``forcing`` replaces ``e = J_h'(U_r)``.  Each step is a MINRES solve
    warm-started at the previous iterate and preconditioned by
    ``Pi (-Lap_h + Vbar)^-1 Pi*``.  Contraction ratios are measured in the
    energy norm.  The activation ratio ``|e|_* / (zeta |U_r|)`` is
    recorded; with ``strict_activation`` a value above ``activation`` stops
    the run.
    """
    sp = problem.space
    cs = constraint_set(problem) if cs is None else cs
    e = problem.gradient() if forcing is None else forcing
    e = sp.symmetrize(e)
    e_dual = _dual_norm(sp, e)

    # the exact group average keeps rounding from seeding modes outside the class
    sym = sp.exact_symmetrize

    def A(v):
        return sym(project_dual(sp, apply_L(problem, project_constraint(sp, v, cs)), cs))

    def M(f):
        return sym(project_constraint(sp, sp.precond(project_dual(sp, f, cs)), cs))

    w = np.zeros(sp.shape) if w0 is None else project_constraint(sp, sp.symmetrize(w0), cs)
    norms = [sp.norm(w)]
    kappas = []
    inner = []
    zeta = float("nan")
    best_iters = -1
    diffs = []
    violation = 0.0
    converged = False
    activated = True
    ratio = float("nan")
    u_norm = sp.norm(problem.U)
    k = 0
    for k in range(1, max_iter + 1):
        rhs = -project_dual(sp, e + nonlinear_N_prime(problem, w), cs)
        rhs = sp.symmetrize(rhs)
        res = minres(A, rhs, dot=sp.dot, M=M, x0=w, rtol=inner_rtol, maxiter=inner_maxiter)
        inner.append(res.iterations)
        if res.iterations > best_iters and res.alphas:
            best_iters = res.iterations
            zeta = res.harmonic_ritz_min
        if k == 1:
            ratio = e_dual / (zeta * u_norm) if zeta > 0 else math.inf
            activated = ratio <= activation
            if strict_activation and not activated:
                raise ActivationNotReached(f"|e|/(zeta |U_r|) = {ratio:.3e} exceeds {activation}")
        w_new = project_constraint(sp, res.x, cs)
        d = sp.norm(w_new - w)
        diffs.append(d)
        if len(diffs) >= 2:
            kappas.append(d / diffs[-2] if diffs[-2] > 0 else 0.0)
        w = w_new
        wn = sp.norm(w)
        norms.append(wn)
        l2 = math.sqrt(max(sp.dot(w, w), 0.0))
        if l2 > 0:
            violation = max(violation, abs(cs.value(sp, w)) / (l2 * cs.g_norm))
        if len(kappas) >= 2 and kappas[-1] >= 1.0 and kappas[-2] >= 1.0:
            raise ContractionFailed(f"contraction ratio >= 1 twice in a row at r = {problem.r:.4f}", kappas)
        if d <= tol * wn or (wn == 0.0 and d == 0.0):
            converged = True
            break
    return ReductionState(r=problem.r, w=w, w_norm=norms[-1], w_norms=norms, kappa_history=kappas, iterations=k,
                          inner_iterations=inner, zeta_estimate=zeta, error_dual_norm=e_dual,
                          activation_ratio=ratio, activated=activated, constraint_violation=violation,
                          converged=converged, F=problem.energy(w))


def taylor_identity_check(problem: RingProblem, w: np.ndarray) -> dict:
    """Exact quartic expansion of ``J_h(U_r + w)`` and the gap between ``J_h'(U_r)`` and ``e``."""
    sp = problem.space
    J0 = problem.energy()
    J1 = problem.energy(w)
    first = sp.dot(problem.gradient(), w)
    Q = sp.dot(apply_L(problem, w), w)
    Nw = nonlinear_N(problem, w)
    delta1 = J1 - J0 - (first + 0.5 * Q + Nw)
    e = sp.symmetrize((sp.V - 1.0) * problem.U + problem.psi_u - 0.5 * problem.TU2 * problem.U)
    delta2 = first - sp.dot(e, w)
    bump_res = problem.gradient() - e
    bound = _dual_norm(sp, bump_res) * sp.norm(w)
    return {"delta1": delta1, "delta2": delta2, "J": J0, "scale": 1.0 + abs(J0),
            "delta2_bound": bound}


@dataclass
class SolutionCertificate:
    s: int
    m: float
    a: float
    r_closed_form: float
    r_closed_form_printed: float
    r_numeric: float
    w_norm: float
    residual_inf: float
    residual_l2: float
    residual_tolerance: float
    min_u: float
    zeta_estimate: float
    J: float
    iterations: int
    kappa_history: list
    h: float
    window: tuple
    activation_ratio: float
    constraint_violation: float
    scan: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "s": self.s, "m": self.m, "a": self.a, "r_closed_form": self.r_closed_form,
            "r_closed_form_printed": self.r_closed_form_printed, "r_numeric": self.r_numeric,
            "w_norm": self.w_norm, "residual_inf": self.residual_inf, "residual_l2": self.residual_l2,
            "residual_tolerance": self.residual_tolerance, "min_u": self.min_u,
            "zeta_estimate": self.zeta_estimate, "J": self.J, "iterations": self.iterations,
            "kappa_history": [float(k) for k in self.kappa_history], "h": self.h,
            "window": [float(x) for x in self.window], "activation_ratio": self.activation_ratio,
            "constraint_violation": self.constraint_violation, "metadata": self.metadata,
        }


def certificate_residual(space, u: np.ndarray) -> tuple[float, float]:
    res = space.residual(u)
    return float(np.max(np.abs(res))), math.sqrt(max(space.dot(res, res), 0.0))


def residual_tolerance(space, u: np.ndarray) -> float:
    return 10.0 * space.h[0] ** 2 * float(np.max(np.abs(u))) * (1.0 + float(np.max(space.V)))


def ring_space_factory(s: int, params: PotentialParams, h: float = 0.3, W: float = 9.0):
    def make(r: float):
        return RingCell(s, r, params, h=h, W=W)

    return make


def _vertex(x, y, clamp: float = 1.0) -> float:
    """Vertex of the parabola through three points, kept near the middle one."""
    x = np.asarray(x, dtype=float)
    coef = np.polyfit(x - x[1], y, 2)
    if coef[0] >= 0:
        return float(x[int(np.argmax(y))])
    v = x[1] - coef[1] / (2.0 * coef[0])
    lo = x[1] - clamp * (x[1] - x[0])
    hi = x[1] + clamp * (x[2] - x[1])
    return float(min(max(v, lo), hi))


def scan_and_build(gs: GroundState, params: PotentialParams, s: int, n_r: int = 9, *, space_factory=None,
                   h: float = 0.3, W: float = 9.0, alpha_relative: float = 0.3, tol: float = 1e-8,
                   inner_rtol: float = 1e-9, max_iter: int = 30, refine_step: float = 0.01,
                   log=None) -> SolutionCertificate:
    """Sample ``F(r)`` on ``n_r`` Chebyshev points of the window, refine, and certify.

    The best interior sample and its neighbours give a first parabola
    vertex; a second parabola on ``vertex +- refine_step * r_closed``
    gives the reported maximizer.

    The window and closed-form radius use the consistent constants; the
    closed form with the original constants is reported alongside.
    """
    if s < 3:
        raise ConfigError(f"s must be >= 3, got {s}")
    if n_r < 3:
        raise ConfigError(f"n_r must be >= 3, got {n_r}")
    factory = ring_space_factory(s, params, h, W) if space_factory is None else space_factory
    win = radius_window(gs, params, s, convention="consistent", alpha_relative=alpha_relative)
    radii = win.chebyshev(n_r)
    rows = []
    ws = []
    w_prev = None

    def evaluate(r, w0):
        t0 = time.perf_counter()
        sp = factory(float(r))
        prob = build_problem(sp, gs, float(r))
        st = solve_w(prob, tol=tol, w0=w0, inner_rtol=inner_rtol, max_iter=max_iter)
        if log is not None:
            log(f"s={s} r={r:.4f} F={st.F:.12g} |w|={st.w_norm:.4e} iters={st.iterations} "
                f"inner={st.inner_iterations} kappa={[round(k, 4) for k in st.kappa_history]} "
                f"t={time.perf_counter() - t0:.1f}s")
        return sp, prob, st

    for r in radii:
        _, _, st = evaluate(r, w_prev)
        w_prev = st.w
        ws.append(st.w)
        rows.append({"r": float(r), "F": st.F, "w_norm": st.w_norm, "iters": st.iterations})
    F = np.array([row["F"] for row in rows])
    j = int(np.argmax(F))
    if j == 0 or j == n_r - 1:
        raise MaximizerOnBoundary(f"largest F(r) sample sits at the window endpoint r = {radii[j]:.4f}")
    r1 = _vertex(radii[j - 1: j + 2], F[j - 1: j + 2])
    # second pass: a symmetric local stencil around the first vertex
    delta = refine_step * win.center
    stencil = [r1 - delta, r1, r1 + delta]
    local = []
    for r in stencil:
        sp, prob, st = evaluate(r, ws[j])
        local.append(st.F)
        rows.append({"r": float(r), "F": st.F, "w_norm": st.w_norm, "iters": st.iterations})
    r_hat = _vertex(np.array(stencil), np.array(local), clamp=2.0)
    sp, prob, st = evaluate(r_hat, ws[j])
    rows.append({"r": float(r_hat), "F": st.F, "w_norm": st.w_norm, "iters": st.iterations})
    rows.sort(key=lambda row: row["r"])
    if not (st.F > F[0] and st.F > F[-1]):
        raise MaximizerOnBoundary(f"F at the refined radius {r_hat:.4f} does not exceed both endpoints")
    u = prob.U + st.w
    rinf, rl2 = certificate_residual(sp, u)
    tol_res = residual_tolerance(sp, u)
    cert = SolutionCertificate(
        s=s, m=params.m, a=params.a,
        r_closed_form=closed_form_radius(gs, params, s, "consistent"),
        r_closed_form_printed=closed_form_radius(gs, params, s, "printed"),
        r_numeric=r_hat, w_norm=st.w_norm, residual_inf=rinf, residual_l2=rl2, residual_tolerance=tol_res,
        min_u=float(np.min(u)), zeta_estimate=st.zeta_estimate, J=st.F, iterations=st.iterations,
        kappa_history=st.kappa_history, h=sp.h[0], window=(win.lower, win.upper),
        activation_ratio=st.activation_ratio, constraint_violation=st.constraint_violation, scan=rows,
        metadata={"space": sp.metadata(), "version": __version__, "V0": params.V0, "theta": params.theta},
    )
    cert._u = u
    cert._space = sp
    if rinf > tol_res:
        raise ResidualTooLarge(f"strong residual {rinf:.3e} exceeds {tol_res:.3e}")
    return cert


class MultiBumpSolver(BaseEstimator):
    """Estimator wrapper around ``scan_and_build``.

    ``fit`` takes a fitted ground state through ``X`` (or computes one) and
    stores ``certificate_``; ``predict`` evaluates ``u_s`` at points of
    the cell around the first bump by trilinear interpolation.
    """

    def __init__(self, s: int = 6, m: float = 0.5, a: float | None = None, target_radius: float | None = 32.0,
                 target_s: int | None = 4, h: float = 0.3, W: float = 9.0, n_r: int = 9, alpha_relative: float = 0.3,
                 tol: float = 1e-8, V0: float = 1.0):
        self.s = s
        self.m = m
        self.a = a
        self.target_radius = target_radius
        self.target_s = target_s
        self.h = h
        self.W = W
        self.n_r = n_r
        self.alpha_relative = alpha_relative
        self.tol = tol
        self.V0 = V0

    def _params(self, gs) -> PotentialParams:
        if self.a is not None:
            a = self.a
        elif self.target_radius is not None:
            base = self.s if self.target_s is None else self.target_s
            a = target_radius_amplitude(gs, base, self.target_radius, self.m)
        else:
            raise ConfigError("set either a or target_radius")
        return PotentialParams(V0=self.V0, a=a, m=self.m)

    def fit(self, X=None, y=None):
        from .radial import GroundStateSolver

        gs = X if isinstance(X, GroundState) else GroundStateSolver().fit().ground_state_
        self.params_ = self._params(gs)
        self.certificate_ = scan_and_build(gs, self.params_, self.s, self.n_r, h=self.h, W=self.W,
                                           alpha_relative=self.alpha_relative, tol=self.tol)
        self.u_ = self.certificate_._u
        self.space_ = self.certificate_._space
        return self

    def predict(self, X):
        from scipy.ndimage import map_coordinates
        from sklearn.utils.validation import check_is_fitted

        check_is_fitted(self, "u_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != 3:
            raise ValueError("X must have three columns")
        sp = self.space_
        idx = (X - np.array([sp.r - sp.W, -sp.W, -sp.W])) / sp.h[0]
        return map_coordinates(self.u_, idx.T, order=1, mode="constant", cval=0.0)
