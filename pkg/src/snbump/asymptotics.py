"""Bump geometry, interaction sums and the closed-form energy asymptotics.

Two constant conventions are carried side by side:

``"printed"``
    ``T_const = A2/(16 pi)`` and ``T_int = A1^2/(128 pi^2) s log s / r``,
    radius constant 64.
``"consistent"``
    the values implied by ``Psi_u = T[u^2]/2`` and the exact ring sum:
    ``T_const = A2/(32 pi)``, ``T_int = A1^2/(32 pi^2) s log s / r``,
    radius constant 16.

``fit_interaction_constant`` decides numerically which one the data support.
All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, interpolate, optimize

from ._validation import check_int, check_positive
from .exceptions import (
    ConfigError,
    NoInteriorMax,
    QuadratureNotConverged,
    SeparationTooSmall,
)
from .radial import GroundState

__all__ = [
    "CONVENTIONS",
    "PotentialParams",
    "BumpConfiguration",
    "RadiusWindow",
    "EnergyExpansion",
    "bump_points",
    "ring_sum",
    "ring_sum_bounds",
    "pair_interaction",
    "pair_interaction_shell",
    "interaction_sum_check",
    "fit_interaction_constant",
    "energy_expansion",
    "g_function",
    "closed_form_radius",
    "radius_window",
    "optimal_radius",
    "degenerate_regime",
    "target_radius_amplitude",
]

# (const denominator / pi, interaction coefficient * pi^2, radius constant)
CONVENTIONS = {
    "printed": {"const": 16.0, "int": 1.0 / 128.0, "radius": 64.0, "c_pair": 1.0 / 32.0},
    "consistent": {"const": 32.0, "int": 1.0 / 32.0, "radius": 16.0, "c_pair": 1.0 / 8.0},
}


def _conv(name: str) -> dict:
    try:
        return CONVENTIONS[name]
    except KeyError:
        raise ConfigError(f"unknown convention {name!r}; choose from {sorted(CONVENTIONS)}") from None


@dataclass(frozen=True)
class PotentialParams:
    """``V(r) = V0 + a (1 + r^2)^(-m/2)``, so ``V - V0 - a/r^m = O(r^(-m-2))``."""

    V0: float = 1.0
    a: float = 1.0
    m: float = 0.5
    theta: float = 2.0

    def __post_init__(self):
        check_positive(self.V0, "V0")
        if not (self.a >= 0.0 and math.isfinite(self.a)):
            raise ConfigError(f"a must be nonnegative, got {self.a}")
        if not 0.0 < self.m < 1.0:
            raise ConfigError(f"m must lie in (0, 1), got {self.m}")
        check_positive(self.theta, "theta")

    def V(self, r):
        r = np.asarray(r, dtype=float)
        return self.V0 + self.a * (1.0 + r * r) ** (-0.5 * self.m)

    @property
    def in_main_range(self) -> bool:
        return 0.5 <= self.m < 1.0

    @classmethod
    def flat(cls) -> "PotentialParams":
        """``V = 1`` exactly."""
        return cls(V0=1.0, a=0.0, m=0.5)


def target_radius_amplitude(gs: GroundState, s: int, r_star: float, m: float,
                            convention: str = "consistent") -> float:
    """Amplitude ``a`` that puts the closed-form optimal radius at ``r_star``."""
    s = check_int(s, "s", 2)
    check_positive(r_star, "r_star")
    K = _conv(convention)["radius"]
    return gs.A1 * s * math.log(s) / (K * m * math.pi**2 * r_star ** (1.0 - m))


@dataclass
class BumpConfiguration:
    s: int
    r: float
    centers: np.ndarray
    distances: np.ndarray  # |xi_1 - xi_i|, i = 1..s

    @property
    def min_distance(self) -> float:
        if self.s < 2:
            return math.inf
        return 2.0 * self.r * math.sin(math.pi / self.s)

    @classmethod
    def single(cls) -> "BumpConfiguration":
        """One bump at the origin."""
        return cls(s=1, r=0.0, centers=np.zeros((1, 3)), distances=np.zeros(1))


def bump_points(s: int, r: float) -> BumpConfiguration:
    """Centers ``r (cos 2(i-1)pi/s, sin 2(i-1)pi/s, 0)`` for ``i = 1..s``."""
    s = check_int(s, "s", 2)
    r = check_positive(r, "r")
    ang = 2.0 * math.pi * np.arange(s) / s
    centers = np.column_stack([r * np.cos(ang), r * np.sin(ang), np.zeros(s)])
    distances = 2.0 * r * np.abs(np.sin(math.pi * np.arange(s) / s))
    return BumpConfiguration(s=s, r=r, centers=centers, distances=distances)


@dataclass
class RingSum:
    s: int
    r: float
    p: float
    value: float
    asymptotic: float | None = None
    ratio: float | None = None


def ring_sum(s: int, r: float, p: float = 1.0) -> RingSum:
    """Exact ``sum_{i=2}^s |xi_1 - xi_i|^-p``; for ``p = 1`` also the ratio to ``s log s/(pi r)``."""
    s = check_int(s, "s", 2)
    r = check_positive(r, "r")
    if p < 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    i = np.arange(1, s, dtype=float)
    d = 2.0 * r * np.sin(math.pi * i / s)
    value = float(np.sum(d ** (-p)))
    out = RingSum(s=s, r=r, p=p, value=value)
    if p == 1:
        out.asymptotic = s * math.log(s) / (math.pi * r)
        out.ratio = value / out.asymptotic
    return out


def ring_sum_bounds(s: int, r: float) -> tuple[float, float]:
    """The integral bounds ``int_{3/2}^{s-3/2}`` and ``int_{1/2}^{s-1/2}`` of ``1/(2r sin(pi x/s))``."""
    s = check_int(s, "s", 4)
    r = check_positive(r, "r")

    def f(x):
        return 1.0 / (2.0 * r * math.sin(math.pi * x / s))

    def quad(a, b):
        # the integrand is symmetric about s/2 and steep near the ends
        mid = 0.5 * s
        pts = [a * 2**k for k in range(1, 64) if a * 2**k < mid]
        edges = [a, *pts, mid]
        total = math.fsum(integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)[0]
                          for lo, hi in zip(edges[:-1], edges[1:]))
        return 2.0 * total if b == s - a else total

    return quad(1.5, s - 1.5), quad(0.5, s - 0.5)


def _gl_panels(lo, hi, width, order):
    n_pan = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, n_pan + 1)
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _pair_quad(gs, d, order, extent, width, swap):
    rc, wr = _gl_panels(0.0, extent, width, order)
    if swap:
        z, wz = _gl_panels(d - extent, d + extent, width, order)
    else:
        z, wz = _gl_panels(-extent, extent, width, order)
    R, Z = np.meshgrid(rc, z, indexing="ij")
    r1 = np.hypot(R, Z)
    r2 = np.hypot(R, Z - d)
    if swap:
        f = gs.Psi_at(r1) * gs.U_at(r2) ** 2
    else:
        f = gs.U_at(r1) ** 2 * gs.Psi_at(r2)
    return 16.0 * math.pi**2 * float(wr @ (R * f) @ wz)


def pair_interaction(gs: GroundState, d: float, *, rtol: float = 1e-9, extent: float = 30.0,
                     width: float = 0.5, swap: bool = False) -> float:
    """``D(d) = int int U^2(x) U^2(y - d e)/|x - y|`` by axisymmetric quadrature.

    Written as ``16 pi^2 int int rho_c U^2(|x|) Psi(|x - d e|) drho_c dz`` in
    cylindrical coordinates with panel Gauss–Legendre rules; two orders
    must agree to ``rtol``.  ``swap=True`` centers the quadrature on the
    other bump.
    """
    if not d >= 0.0:
        raise ConfigError(f"d must be nonnegative, got {d}")
    extent = min(extent, gs.grid.R_rad)
    lo = _pair_quad(gs, d, 8, extent, width, swap)
    hi = _pair_quad(gs, d, 12, extent, width, swap)
    if abs(hi - lo) > rtol * abs(hi):
        raise QuadratureNotConverged(f"D({d}) levels disagree: {lo!r} vs {hi!r}")
    return hi


def pair_interaction_shell(gs: GroundState, d: float, order: int = 16) -> float:
    """Independent one-dimensional route for ``D(d)`` through the shell average.

    The sphere average of ``Psi(|x - d e|)`` over ``|x| = rho`` equals
    ``(1/(2 rho d)) int_{|rho-d|}^{rho+d} t Psi(t) dt``.
    """
    extent = 0.5 * gs.grid.R_rad
    rho, w = _gl_panels(0.0, extent, 0.25, order)
    if d == 0.0:
        avg = gs.Psi_at(rho)
    else:
        t = gs.grid.rho
        F = integrate.cumulative_simpson(t * gs.Psi, x=t, initial=0.0)
        spline = interpolate.CubicSpline(t, F)
        R = t[-1]

        def prim(x):
            # beyond the grid Psi = Psi(R) R / t, so t Psi is constant
            return np.where(x <= R, spline(np.minimum(x, R)), F[-1] + gs.Psi[-1] * R * (x - R))

        avg = (prim(rho + d) - prim(np.abs(rho - d))) / (2.0 * rho * d)
    return float(32.0 * math.pi**2 * np.sum(w * rho**2 * gs.U_at(rho) ** 2 * avg))


@dataclass
class InteractionReport:
    s: int
    r: float
    sum_exact: float
    sum_monopole: float
    printed_leading: float
    fitted_c: float

    @property
    def ratio_exact_monopole(self) -> float:
        return self.sum_exact / self.sum_monopole


def _pair_table(gs, distances, d_far):
    out = np.empty_like(distances)
    for j, d in enumerate(distances):
        out[j] = pair_interaction(gs, float(d)) if d < d_far else gs.A1**2 / d
    return out


def interaction_sum_check(gs: GroundState, s: int, r: float, *, d_far: float = 40.0,
                          min_spacing: float = 6.0) -> InteractionReport:
    """Compare ``sum_i (1/8pi) D(|xi_1 - xi_i|)`` with its monopole and leading forms.

    Pairs farther apart than ``d_far`` use ``D = A1^2/d``: the overlap of
    the two densities is below double precision there.
    """
    s = check_int(s, "s", 2)
    r = check_positive(r, "r")
    spacing = 2.0 * r * math.sin(math.pi / s)
    if spacing < min_spacing:
        raise SeparationTooSmall(f"nearest-neighbour spacing {spacing:.3f} < {min_spacing}")
    i = np.arange(1, s // 2 + 1)
    d = 2.0 * r * np.sin(math.pi * i / s)
    mult = np.where(2 * i == s, 1.0, 2.0)
    D = _pair_table(gs, d, d_far)
    S_exact = float(np.sum(mult * D)) / (8.0 * math.pi)
    S_mono = gs.A1**2 / (8.0 * math.pi) * float(np.sum(mult / d))
    slogs = s * math.log(s)
    P = gs.A1**2 / (32.0 * math.pi**2) * slogs / r
    c = S_exact * r / (gs.A1**2 * slogs)
    return InteractionReport(s=s, r=r, sum_exact=S_exact, sum_monopole=S_mono, printed_leading=P, fitted_c=c)


@dataclass
class ConstantFit:
    c: float
    c_least_squares: float
    rows: list
    candidates: dict
    deviations: dict
    match: str | None
    tolerance: float

    def flag_line(self) -> str:
        dev = ", ".join(f"{k}: {v:+.2%}" for k, v in self.deviations.items())
        verdict = f"matches {self.match}" if self.match else "matches neither candidate"
        return f"fitted c = {self.c:.6e} {verdict} within {self.tolerance:.0%} ({dev})"


def fit_interaction_constant(gs: GroundState, s_values=(64, 128, 256, 512, 1024, 2048, 4096),
                             params: PotentialParams | None = None, *,
                             radius_convention: str = "printed", tolerance: float = 0.05) -> ConstantFit:
    """Fit ``S_exact ~ c A1^2 s log s / r`` with ``r = r_s(s)`` over ``s_values``.

    ``c`` is the mean of the per-``s`` ratios (least squares on relative
    residuals); the plain least-squares value is reported alongside.
    """
    params = PotentialParams() if params is None else params
    rows = []
    x = []
    y = []
    for s in s_values:
        r = closed_form_radius(gs, params, s, radius_convention)
        rep = interaction_sum_check(gs, s, r)
        xs = gs.A1**2 * s * math.log(s) / r
        rows.append({"s": s, "r": r, "sum_exact": rep.sum_exact, "sum_monopole": rep.sum_monopole,
                     "printed_leading": rep.printed_leading, "fitted_c": rep.fitted_c})
        x.append(xs)
        y.append(rep.sum_exact)
    x = np.array(x)
    y = np.array(y)
    c = float(np.mean(y / x))
    c_ls = float(np.dot(x, y) / np.dot(x, x))
    cands = {"1/(8 pi^2)": 1.0 / (8.0 * math.pi**2), "1/(32 pi^2)": 1.0 / (32.0 * math.pi**2)}
    devs = {k: c / v - 1.0 for k, v in cands.items()}
    match = None
    for k, v in devs.items():
        if abs(v) <= tolerance:
            match = k
    return ConstantFit(c=c, c_least_squares=c_ls, rows=rows, candidates=cands, deviations=devs,
                       match=match, tolerance=tolerance)


@dataclass
class EnergyExpansion:
    s: int
    r: float
    convention: str
    term_const: float
    term_pot: float
    term_int: float
    J_pred: float
    term_int_exact_sum: float = float("nan")
    J_pred_exact_sum: float = float("nan")
    remainder: float | None = None

    def row(self) -> dict:
        return {"s": self.s, "r": self.r, "term_const": self.term_const, "term_pot": self.term_pot,
                "term_int": self.term_int, "J_pred": self.J_pred}


def energy_expansion(gs: GroundState, params: PotentialParams, s: int, r: float,
                     convention: str = "consistent") -> EnergyExpansion:
    """The three displayed terms and ``J ~ s (T_const + T_pot - T_int)``."""
    s = check_int(s, "s", 2)
    r = check_positive(r, "r")
    cv = _conv(convention)
    t_const = gs.A2 / (cv["const"] * math.pi)
    t_pot = params.a * gs.A1 / (2.0 * r**params.m)
    t_int = gs.A1**2 * cv["int"] / math.pi**2 * s * math.log(s) / r
    # same constant with the exact ring sum in place of s log s/(pi r)
    t_int_exact = gs.A1**2 * cv["int"] / math.pi * ring_sum(s, r).value
    return EnergyExpansion(
        s=s, r=r, convention=convention, term_const=t_const, term_pot=t_pot, term_int=t_int,
        J_pred=s * (t_const + t_pot - t_int), term_int_exact_sum=t_int_exact,
        J_pred_exact_sum=s * (t_const + t_pot - t_int_exact),
    )


def g_function(gs: GroundState, params: PotentialParams, s: int, r, convention: str = "consistent"):
    """Per-bump reduced energy ``a A1/(2 r^m) - C_int s log s / r``."""
    cv = _conv(convention)
    r = np.asarray(r, dtype=float)
    return params.a * gs.A1 / (2.0 * r**params.m) - gs.A1**2 * cv["int"] / math.pi**2 * s * math.log(s) / r


def closed_form_radius(gs: GroundState, params: PotentialParams, s: int,
                       convention: str = "consistent") -> float:
    """``r_s = (A1/(K a m pi^2))^(1/(1-m)) (s log s)^(1/(1-m))`` with ``K`` from the convention."""
    s = check_int(s, "s", 2)
    if params.a <= 0:
        raise ConfigError("closed-form radius needs a > 0")
    K = _conv(convention)["radius"]
    e = 1.0 / (1.0 - params.m)
    return (gs.A1 / (K * params.a * params.m * math.pi**2)) ** e * (s * math.log(s)) ** e


@dataclass
class RadiusWindow:
    s: int
    lower: float
    upper: float
    alpha: float
    center: float

    def contains(self, r: float) -> bool:
        return self.lower < r < self.upper

    def chebyshev(self, n: int) -> np.ndarray:
        """``n`` Chebyshev–Lobatto points, endpoints included, ascending."""
        k = np.arange(n)
        x = -np.cos(math.pi * k / (n - 1))
        return 0.5 * (self.lower + self.upper) + 0.5 * (self.upper - self.lower) * x


def radius_window(gs: GroundState, params: PotentialParams, s: int, alpha: float | None = None,
                  convention: str = "consistent", alpha_relative: float = 0.3) -> RadiusWindow:
    """``I_s = ((K' - alpha), (K' + alpha)) (s log s)^(1/(1-m))``.

    ``K'`` is the closed-form prefactor; ``alpha`` defaults to
    ``alpha_relative * K'``.
    """
    r_c = closed_form_radius(gs, params, s, convention)
    scale = (s * math.log(s)) ** (1.0 / (1.0 - params.m))
    K = r_c / scale
    alpha = alpha_relative * K if alpha is None else check_positive(alpha, "alpha")
    lower = (K - alpha) * scale
    if lower <= 0:
        raise ConfigError(f"window lower endpoint {lower} is not positive; reduce alpha")
    return RadiusWindow(s=s, lower=lower, upper=(K + alpha) * scale, alpha=alpha, center=r_c)


def _golden_max(fun, lo, hi, n_coarse=65):
    x = np.linspace(lo, hi, n_coarse)
    y = np.array([fun(t) for t in x])
    i = int(np.argmax(y))
    if i == 0 or i == n_coarse - 1:
        raise NoInteriorMax(f"maximum on the sampled interval sits at the endpoint {x[i]:.6g}")
    res = optimize.minimize_scalar(lambda t: -fun(t), bracket=(x[i - 1], x[i], x[i + 1]),
                                   method="golden", tol=1e-12)
    if not lo < res.x < hi:
        raise NoInteriorMax(f"golden-section maximizer {res.x:.6g} left the interval")
    return float(res.x)


@dataclass
class OptimalRadius:
    s: int
    convention: str
    r_closed: float
    window: RadiusWindow
    r_numeric: float
    stationarity_gap: float
    diagnostic: dict | None = None


def optimal_radius(gs: GroundState, params: PotentialParams, s: int, *, convention: str = "consistent",
                   alpha: float | None = None, c_rem: float = 1.0) -> OptimalRadius:
    """Closed-form and golden-section maximizer of ``g`` on ``I_s``.

    For ``m < 1/2`` the degenerate-regime diagnostic is attached.
    """
    s = check_int(s, "s", 3)
    r_c = closed_form_radius(gs, params, s, convention)
    win = radius_window(gs, params, s, alpha, convention)
    r_num = _golden_max(lambda r: float(g_function(gs, params, s, r, convention)), win.lower, win.upper)
    ex = energy_expansion(gs, params, s, r_c, convention)
    gap = abs(params.m * ex.term_pot - ex.term_int) / ex.term_int
    diag = None
    if params.m < 0.5:
        diag = degenerate_regime(gs, params, [s], c_rem=c_rem, convention=convention)[0]
    return OptimalRadius(s=s, convention=convention, r_closed=r_c, window=win, r_numeric=r_num,
                         stationarity_gap=gap, diagnostic=diag)


def degenerate_regime(gs: GroundState, params: PotentialParams, s_values, *, c_rem: float = 1.0,
                      convention: str = "printed") -> list:
    """Maximizer of ``gbar(r) = -C_int s log s / r + c s / r^(2m)`` for ``m < 1/2``.

    Returns per ``s``: the golden-section maximizer, the closed form
    ``(C_int log s/(2 m c))^(1/(1-2m))``, the spacing ``2 r sin(pi/s)`` and
    the ratio of the maximizer to ``(log s)^(1/m)``.
    """
    m = params.m
    if not 0.0 < m < 0.5:
        raise ConfigError(f"degenerate-regime diagnostic needs 0 < m < 1/2, got {m}")
    check_positive(c_rem, "c_rem")
    C = gs.A1**2 * _conv(convention)["int"] / math.pi**2
    rows = []
    for s in s_values:
        s = check_int(s, "s", 3)
        L = math.log(s)

        def gbar(r, s=s, L=L):
            return -C * s * L / r + c_rem * s / r ** (2.0 * m)

        r_cf = (C * L / (2.0 * m * c_rem)) ** (1.0 / (1.0 - 2.0 * m))
        # search in log r so the bracket spans decades
        lo, hi = math.log(r_cf) - 3.0, math.log(r_cf) + 3.0
        r_num = math.exp(_golden_max(lambda t: gbar(math.exp(t)) / s, lo, hi))
        rows.append({
            "s": s, "r_bar": r_num, "r_bar_closed": r_cf,
            "spacing": 2.0 * r_num * math.sin(math.pi / s),
            "ratio_to_log_power_1_over_m": r_num / L ** (1.0 / m),
            "ratio_to_log_power_1_over_1m2m": r_num / L ** (1.0 / (1.0 - 2.0 * m)),
        })
    return rows


def spacing_is_decreasing(rows) -> bool:
    sp = [row["spacing"] for row in rows]
    return all(b < a for a, b in zip(sp[:-1], sp[1:]))


def log_exponent(rows) -> float:
    """Slope of ``log r_bar`` against ``log log s``."""
    x = np.log([math.log(r["s"]) for r in rows])
    y = np.log([r["r_bar"] for r in rows])
    return float(np.polyfit(x, y, 1)[0])

