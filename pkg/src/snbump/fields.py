"""Three-dimensional grids, the free-space Newtonian operator and ansatz fields.

Fields live on node-centered Cartesian grids symmetric about the origin and
vanish outside (zero Dirichlet ghosts).  The discrete energy

    J_h(u) = 1/2 <u, (-Lap_h + V) u> - 1/8 <T_h[u^2], u^2>

uses the 7-point Laplacian in its quadratic form, so that its gradient is
exactly the strong residual ``-Lap_h u + V u - T_h[u^2] u / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy import ndimage, special
from scipy.sparse.linalg import LinearOperator, cg

from ._validation import check_positive
from .asymptotics import BumpConfiguration, PotentialParams, bump_points
from .exceptions import BoundaryMassTooLarge, BudgetExceeded, ConfigError, InnerSolveStalled, RingOutOfGrid
from .radial import GroundState

__all__ = [
    "GridSpec",
    "Grid",
    "Field",
    "Ansatz",
    "build_grid",
    "cell_average_inverse_distance",
    "lattice_self_weight",
    "symmetrize",
    "t_apply",
    "assemble_ansatz",
    "energy_J",
    "residual_strong",
    "CartesianSpace",
    "SpaceBase",
]

BOUNDARY_MASS_TOL = 1e-8
_WORKERS = {"n": 1}


def set_workers(n: int) -> None:
    """Worker count for FFTs; results do not depend on it beyond round-off."""
    _WORKERS["n"] = max(1, int(n))


def _nodes(L: float, h: float) -> int:
    return 2 * int(round(L / h)) + 1


@dataclass(frozen=True)
class GridSpec:
    half_extents: tuple = (20.0, 20.0, 9.0)
    spacings: tuple = (0.3, 0.3, 0.3)
    padding: int = 2
    ring_radius: float = 0.0
    margin: float = 8.0
    budget_bytes: float = 3.0e9
    singular: str = "corrected"

    def __post_init__(self):
        if len(self.half_extents) != 3 or len(self.spacings) != 3:
            raise ConfigError("half_extents and spacings need three entries")
        for L in self.half_extents:
            check_positive(L, "half extent")
        for h in self.spacings:
            check_positive(h, "spacing")
        if self.padding < 2:
            raise ConfigError(f"padding factor must be >= 2, got {self.padding}")

    @property
    def node_counts(self) -> tuple:
        return tuple(_nodes(L, h) for L, h in zip(self.half_extents, self.spacings))

    @property
    def conv_buffer(self) -> tuple:
        return tuple(self.padding * n for n in self.node_counts)

    @classmethod
    def desk(cls, ring_radius: float, h: float = 0.3, margin: float = 9.0, **kw) -> "GridSpec":
        """Lateral half-extent ``r + margin``, vertical half-extent ``margin``."""
        L = ring_radius + margin
        return cls(half_extents=(L, L, margin), spacings=(h, h, h), ring_radius=ring_radius,
                   margin=margin, **kw)

    def memory_estimate(self) -> float:
        n = np.prod(self.node_counts, dtype=float)
        fft = np.prod([sfft.next_fast_len(b, real=True) for b in self.conv_buffer], dtype=float)
        # padded real buffer, its transform, the kernel transform, plus working fields
        return 8.0 * (fft + 2.0 * fft) + 24.0 * n * 8.0


@dataclass
class Grid:
    spec: GridSpec
    axes: tuple
    shape: tuple
    h: tuple
    fft_shape: tuple
    _kernel_hat: np.ndarray | None = field(default=None, repr=False)

    @property
    def dV(self) -> float:
        return float(np.prod(self.h))

    def coords(self):
        x1, x2, x3 = self.axes
        return x1[:, None, None], x2[None, :, None], x3[None, None, :]

    def radius(self) -> np.ndarray:
        x1, x2, x3 = self.coords()
        return np.sqrt(x1**2 + x2**2 + x3**2)

    @property
    def origin(self) -> tuple:
        return tuple(float(a[0]) for a in self.axes)

    def kernel_hat(self) -> np.ndarray:
        if self._kernel_hat is None:
            self._kernel_hat = _newton_kernel_hat(self.shape, self.h, self.fft_shape, self.spec.singular)
        return self._kernel_hat


def build_grid(spec: GridSpec) -> Grid:
    n = spec.node_counts
    if min(n) < 16:
        raise ConfigError(f"need at least 16 nodes per dimension, got {n}")
    need = spec.ring_radius + spec.margin
    if min(spec.half_extents[:2]) < need:
        raise RingOutOfGrid(f"lateral half-extent {min(spec.half_extents[:2])} < ring radius + margin = {need}")
    if spec.memory_estimate() > spec.budget_bytes:
        raise BudgetExceeded(f"estimated {spec.memory_estimate() / 1e9:.2f} GB exceeds budget "
                             f"{spec.budget_bytes / 1e9:.2f} GB")
    axes = tuple(h * np.arange(-(k // 2), k // 2 + 1, dtype=float) for k, h in zip(n, spec.spacings))
    fft_shape = tuple(sfft.next_fast_len(b, real=True) for b in spec.conv_buffer)
    return Grid(spec=spec, axes=axes, shape=n, h=tuple(spec.spacings), fft_shape=fft_shape)


def _antiderivative(x, y, z):
    """``F`` with ``d^3 F/dx dy dz = 1/|x|`` (terms with a zero prefactor are dropped)."""
    r = math.sqrt(x * x + y * y + z * z)
    out = 0.0
    if y and z:
        out += y * z * math.log(x + r) - 0.5 * x * x * (math.atan(y * z / (x * r)) if x else 0.0)
    if x and z:
        out += x * z * math.log(y + r) - 0.5 * y * y * (math.atan(x * z / (y * r)) if y else 0.0)
    if x and y:
        out += x * y * math.log(z + r) - 0.5 * z * z * (math.atan(x * y / (z * r)) if z else 0.0)
    return out


def cell_average_inverse_distance(h1: float, h2: float, h3: float) -> float:
    """Mean of ``1/|x|`` over the cell ``[-h1/2, h1/2] x [-h2/2, h2/2] x [-h3/2, h3/2]``."""
    a = (0.5 * h1, 0.5 * h2, 0.5 * h3)
    total = 0.0
    for c in range(8):
        pt = [a[k] if (c >> k) & 1 else 0.0 for k in range(3)]
        sign = (-1) ** (3 - bin(c).count("1"))
        total += sign * _antiderivative(*pt)
    return 8.0 * total / (h1 * h2 * h3)


def lattice_self_weight(h1: float, h2: float, h3: float) -> float:
    """Value standing in for ``1/|0|`` that makes the punctured trapezoid sum accurate.

    It is minus the analytically continued lattice sum ``sum' 1/|y|`` over
    ``y = (h1 j1, h2 j2, h3 j3)``, evaluated by Ewald splitting.  For a
    cubic lattice this is ``2.8372974794806.../h``.
    """
    h = np.array([h1, h2, h3], dtype=float)
    vol = float(np.prod(h))
    eta = math.sqrt(math.pi) / vol ** (1.0 / 3.0)
    nr = [int(math.ceil(6.5 / (eta * hh))) + 1 for hh in h]
    nk = [int(math.ceil(13.0 * eta * hh / (2.0 * math.pi))) + 1 for hh in h]

    def lattice(n, scale):
        ax = [np.arange(-k, k + 1) * sc for k, sc in zip(n, scale)]
        pts = np.stack(np.meshgrid(*ax, indexing="ij"), -1).reshape(-1, 3)
        d = np.sqrt(np.sum(pts * pts, axis=1))
        return d[d > 0]

    dr = lattice(nr, h)
    dk = lattice(nk, 2.0 * math.pi / h)
    z = (np.sum(special.erfc(eta * dr) / dr)
         + 4.0 * math.pi / vol * np.sum(np.exp(-dk * dk / (4.0 * eta * eta)) / (dk * dk))
         - math.pi / (vol * eta * eta) - 2.0 * eta / math.sqrt(math.pi))
    return -float(z)


def _newton_kernel_hat(shape, h, fft_shape, singular="corrected"):
    idx = []
    for n_, M, hh in zip(shape, fft_shape, h):
        k = np.arange(M)
        k = np.where(k <= M // 2, k, k - M).astype(float)
        # distances beyond the data extent never meet a source-target pair
        idx.append(k * hh)
    X, Y, Z = np.meshgrid(*idx, indexing="ij", sparse=True)
    R = np.sqrt(X * X + Y * Y + Z * Z)
    with np.errstate(divide="ignore"):
        G = 1.0 / (4.0 * math.pi * R)
    if singular == "corrected":
        G[0, 0, 0] = lattice_self_weight(*h) / (4.0 * math.pi)
    elif singular == "cell-average":
        G[0, 0, 0] = cell_average_inverse_distance(*h) / (4.0 * math.pi)
    else:
        raise ConfigError(f"unknown singular-cell rule {singular!r}")
    G *= float(np.prod(h))
    return sfft.rfftn(G, workers=_WORKERS["n"])


def convolve_newton(f: np.ndarray, shape, fft_shape, kernel_hat) -> np.ndarray:
    fh = sfft.rfftn(f, s=fft_shape, workers=_WORKERS["n"])
    fh *= kernel_hat
    out = sfft.irfftn(fh, s=fft_shape, workers=_WORKERS["n"])
    return np.ascontiguousarray(out[: shape[0], : shape[1], : shape[2]])


def boundary_ratio(f: np.ndarray) -> float:
    peak = float(np.max(np.abs(f)))
    if peak == 0.0:
        return 0.0
    faces = max(float(np.max(np.abs(f[i]))) for i in (0, -1))
    faces = max(faces, float(np.max(np.abs(f[:, [0, -1]]))), float(np.max(np.abs(f[:, :, [0, -1]]))))
    return faces / peak


@dataclass
class Field:
    grid: Grid
    values: np.ndarray
    symmetry: int | None = None  # None: raw; s: symmetrized with order s

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != tuple(self.grid.shape):
            raise ValueError(f"values have shape {self.values.shape}, grid is {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite values")

    def like(self, values, symmetry="same") -> "Field":
        return Field(self.grid, values, self.symmetry if symmetry == "same" else symmetry)


def t_apply(fg: Field, check: bool = True) -> Field:
    """``T[fg] = (1/4pi) int fg(y)/|x-y| dy`` by zero-padded free-space convolution."""
    g = fg.grid
    if check:
        ratio = boundary_ratio(fg.values)
        if ratio > BOUNDARY_MASS_TOL:
            raise BoundaryMassTooLarge(f"boundary/peak ratio {ratio:.2e} exceeds {BOUNDARY_MASS_TOL:.0e}")
    out = convolve_newton(fg.values, g.shape, g.fft_shape, g.kernel_hat())
    return fg.like(out)


def _rotate(values: np.ndarray, grid: Grid, angle: float) -> np.ndarray:
    """``f(R_angle x)`` sampled on the grid by trilinear interpolation."""
    x1, x2, _ = grid.axes
    c, s = math.cos(angle), math.sin(angle)
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    y1 = c * X1 - s * X2
    y2 = s * X1 + c * X2
    i1 = (y1 - x1[0]) / grid.h[0]
    i2 = (y2 - x2[0]) / grid.h[1]
    out = np.empty_like(values)
    coords = np.array([i1.ravel(), i2.ravel()])
    for k in range(values.shape[2]):
        out[:, :, k] = ndimage.map_coordinates(values[:, :, k], coords, order=1, mode="constant",
                                               cval=0.0).reshape(X1.shape)
    return out


def _exact_rotations(grid: Grid, s: int) -> bool:
    """Rotations by ``2 pi/s`` map the grid onto itself (``s`` in 1, 2, 4 on a square lateral grid)."""
    if s in (1, 2):
        return True
    return s == 4 and grid.shape[0] == grid.shape[1] and grid.h[0] == grid.h[1]


def _flip_average(f: np.ndarray) -> np.ndarray:
    f = 0.5 * (f + f[:, ::-1, :])
    return 0.5 * (f + f[:, :, ::-1])


def _symmetrize_values(values: np.ndarray, grid: Grid, s: int, exact_only: bool = False) -> np.ndarray:
    if s == 2 or (s == 4 and _exact_rotations(grid, 4)):
        acc = values.copy()
        for k in range(1, s):
            acc = acc + np.rot90(values, k * 4 // s, axes=(0, 1))
        return _flip_average(acc / s)
    if exact_only or s == 1:
        return _flip_average(values)
    acc = values.copy()
    for k in range(1, s):
        acc += _rotate(values, grid, 2.0 * math.pi * k / s)
    return _flip_average(acc / s)


def symmetrize(f: Field, s: int) -> Field:
    """Average over rotations by ``2 pi k/s`` about ``x3`` and the flips of ``x2`` and ``x3``."""
    if s < 1:
        raise ConfigError(f"symmetry order must be >= 1, got {s}")
    for a in f.grid.axes:
        if not np.allclose(a, -a[::-1], atol=1e-12):
            raise ConfigError("grid must be symmetric about the origin")
    return f.like(_symmetrize_values(f.values, f.grid, s), symmetry=s)


def neg_laplacian(f: np.ndarray, h) -> np.ndarray:
    """7-point ``-Lap_h f`` with zero values outside the array."""
    h1, h2, h3 = (1.0 / (hh * hh) for hh in h)
    out = (2.0 * (h1 + h2 + h3)) * f
    out[1:] -= h1 * f[:-1]
    out[:-1] -= h1 * f[1:]
    out[:, 1:] -= h2 * f[:, :-1]
    out[:, :-1] -= h2 * f[:, 1:]
    out[:, :, 1:] -= h3 * f[:, :, :-1]
    out[:, :, :-1] -= h3 * f[:, :, 1:]
    return out


class SpaceBase:
    """Shared algebra for discrete function spaces.

    Subclasses set ``shape``, ``h``, ``weight`` (the inner product is
    ``weight * h1 h2 h3 * sum f g``), ``V`` and ``symmetry_order``, and
    implement ``t_apply``, ``symmetrize`` and ``bump_geometry``.
    """

    shape: tuple
    h: tuple
    weight: float
    V: np.ndarray

    def _setup_precond(self, shift: float):
        lam = []
        for n, hh in zip(self.shape, self.h):
            k = np.arange(1, n + 1)
            lam.append((2.0 - 2.0 * np.cos(math.pi * k / (n + 1))) / hh**2)
        self._dst_eig = lam[0][:, None, None] + lam[1][None, :, None] + lam[2][None, None, :] + shift

    @property
    def dV(self) -> float:
        return float(np.prod(self.h))

    def dot(self, f, g) -> float:
        return self.weight * self.dV * float(np.sum(f * g))

    def neg_laplacian(self, f):
        return neg_laplacian(f, self.h)

    def h_apply(self, f):
        """``(-Lap_h + V) f``; its quadratic form is the squared norm."""
        return self.neg_laplacian(f) + self.V * f

    def norm(self, f) -> float:
        return math.sqrt(max(self.dot(f, self.h_apply(f)), 0.0))

    def precond(self, f):
        """``(-Lap_h + Vbar)^-1 f`` by sine transforms."""
        fh = sfft.dstn(f, type=1, norm="ortho", workers=_WORKERS["n"])
        fh /= self._dst_eig
        return sfft.idstn(fh, type=1, norm="ortho", workers=_WORKERS["n"])

    def riesz_solve(self, f, rtol: float = 1e-11, maxiter: int = 500):
        """Solve ``(-Lap_h + V) x = f`` by preconditioned conjugate gradients."""
        n = f.size
        A = LinearOperator((n, n), matvec=lambda v: self.h_apply(v.reshape(self.shape)).ravel())
        M = LinearOperator((n, n), matvec=lambda v: self.precond(v.reshape(self.shape)).ravel())
        x, info = cg(A, f.ravel(), rtol=rtol, atol=0.0, maxiter=maxiter, M=M)
        if info != 0:
            raise InnerSolveStalled(f"Riesz solve did not reach rtol={rtol} in {maxiter} iterations")
        return x.reshape(self.shape)

    def exact_symmetrize(self, f):
        return self.symmetrize(f)

    # energy and residual --------------------------------------------------
    def energy(self, u) -> float:
        u2 = u * u
        return 0.5 * self.dot(u, self.h_apply(u)) - 0.125 * self.dot(self.t_apply(u2), u2)

    def residual(self, u):
        return self.h_apply(u) - 0.5 * self.t_apply(u * u) * u


class CartesianSpace(SpaceBase):
    """The full grid; the inner product is the plain trapezoid sum."""

    def __init__(self, grid: Grid, params: PotentialParams, s: int = 1):
        self.grid = grid
        self.params = params
        self.shape = tuple(grid.shape)
        self.h = tuple(grid.h)
        self.weight = 1.0
        self.symmetry_order = s
        self.V = params.V(grid.radius())
        self._setup_precond(float(np.median(self.V)))

    def t_apply(self, f):
        g = self.grid
        return convolve_newton(f, g.shape, g.fft_shape, g.kernel_hat())

    def symmetrize(self, f):
        return _symmetrize_values(f, self.grid, self.symmetry_order)

    def exact_symmetrize(self, f):
        """The part of the group that acts exactly on the grid (flips, and quarter turns)."""
        return _symmetrize_values(f, self.grid, self.symmetry_order, exact_only=True)

    def points(self):
        x1, x2, x3 = self.grid.coords()
        return np.broadcast_arrays(x1, x2, x3)

    def bump_geometry(self, r: float) -> BumpConfiguration:
        return _ring(self.symmetry_order, r)

    def bump_sums(self, gs, r: float):
        return bump_sums(self, gs, self.bump_geometry(r))

    def metadata(self) -> dict:
        g = self.grid
        return {"kind": "cartesian", "n1": g.shape[0], "n2": g.shape[1], "n3": g.shape[2],
                "h1": g.h[0], "h2": g.h[1], "h3": g.h[2], "origin": list(g.origin),
                "symmetry_s": self.symmetry_order}


def _ring(s, r):
    if s == 1:
        c = np.array([[r, 0.0, 0.0]])
        return BumpConfiguration(s=1, r=r, centers=c, distances=np.zeros(1))
    return bump_points(s, r)


@dataclass
class Ansatz:
    bumps: BumpConfiguration
    U_r: Field
    Z: Field
    gs: GroundState = field(repr=False)

    def _geom(self, i):
        x = np.broadcast_arrays(*self.U_r.grid.coords())
        xi = self.bumps.centers[i]
        d = [x[k] - xi[k] for k in range(3)]
        rho = np.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
        return d, rho, xi

    def bump(self, i: int) -> Field:
        _, rho, _ = self._geom(i)
        return Field(self.U_r.grid, self.gs.U_at(rho))

    def Z_i(self, i: int) -> Field:
        return Field(self.U_r.grid, bump_radial_derivative(self.gs, self.bumps, i, *self._geom(i)[:2],
                                                           profile="U"))


def _direction(bumps: BumpConfiguration, i: int) -> np.ndarray:
    """Unit vector ``xi_i/r``; the first axis when ``r = 0``."""
    t = 2.0 * math.pi * i / bumps.s
    return np.array([math.cos(t), math.sin(t), 0.0])


def bump_radial_derivative(gs, bumps, i, d, rho, profile="U"):
    """``d/dr`` of ``f(|x - xi_i(r)|)`` for ``f`` = U, Psi or Psi*U, with ``d = x - xi_i``."""
    e = _direction(bumps, i)
    safe = np.where(rho > 0, rho, 1.0)
    proj = -(e[0] * d[0] + e[1] * d[1] + e[2] * d[2]) / safe
    if profile == "U":
        der = gs.dU_at(rho)
    elif profile == "Psi":
        der = gs.dPsi_at(rho)
    elif profile == "PsiU":
        der = gs.dPsi_at(rho) * gs.U_at(rho) + gs.Psi_at(rho) * gs.dU_at(rho)
    else:
        raise ValueError(profile)
    return np.where(rho > 0, der * proj, 0.0)


def bump_sums(space, gs, bumps: BumpConfiguration):
    """``U_r``, ``Z = dU_r/dr``, ``sum_i Psi_i U_i`` and the constraint density ``g_c``.

    ``g_c = sum_i (T[U_i^2] Z_i + 2 T[U_i Z_i] U_i) = 2 sum_i d/dr (Psi_i U_i)``
    with the single-bump potentials taken from the radial profile.
    """
    x = space.points()
    U = np.zeros(space.shape)
    Z = np.zeros(space.shape)
    PU = np.zeros(space.shape)
    gc = np.zeros(space.shape)
    for i in range(bumps.s):
        xi = bumps.centers[i]
        d = [x[k] - xi[k] for k in range(3)]
        rho = np.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
        u = gs.U_at(rho)
        U += u
        PU += gs.Psi_at(rho) * u
        Z += bump_radial_derivative(gs, bumps, i, d, rho, "U")
        gc += 2.0 * bump_radial_derivative(gs, bumps, i, d, rho, "PsiU")
    return U, Z, PU, gc


def assemble_ansatz(gs: GroundState, bumps: BumpConfiguration, grid: Grid) -> Ansatz:
    """``U_r = sum_i U(|x - xi_i|)`` and ``Z = sum_i dU_{xi_i}/dr`` on the grid.

    The ring configuration is invariant under the symmetry group, so
    ``U_r`` is symmetric by construction and is flagged as such without
    passing through the interpolating projector.
    """
    need = bumps.r + grid.spec.margin
    lateral = min(grid.spec.half_extents[:2])
    if lateral < need:
        raise RingOutOfGrid(f"ring radius {bumps.r} + margin {grid.spec.margin} exceeds half-extent {lateral}")
    x = np.broadcast_arrays(*grid.coords())
    U = np.zeros(grid.shape)
    Z = np.zeros(grid.shape)
    for i in range(bumps.s):
        xi = bumps.centers[i]
        d = [x[k] - xi[k] for k in range(3)]
        rho = np.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
        U += gs.U_at(rho)
        Z += bump_radial_derivative(gs, bumps, i, d, rho)
    return Ansatz(bumps=bumps, U_r=Field(grid, U, bumps.s), Z=Field(grid, Z, bumps.s), gs=gs)


def energy_J(u: Field, params: PotentialParams) -> float:
    """``1/2 int(|grad u|^2 + V u^2) - 1/8 int T[u^2] u^2`` on the grid."""
    sp = CartesianSpace(u.grid, params)
    return sp.energy(u.values)


def residual_strong(u: Field, params: PotentialParams) -> Field:
    """``-Lap_h u + V u - T[u^2] u / 2``."""
    sp = CartesianSpace(u.grid, params)
    return u.like(sp.residual(u.values))
