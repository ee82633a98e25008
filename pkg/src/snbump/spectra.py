"""Low spectra of the linearized ground-state operator per angular sector.

In the sector of angular momentum ``l`` the linearization reads

    A_l f = -f'' - (2/rho) f' + l(l+1) f / rho^2 + f - Psi f - U K_l[U f].

With ``v = rho f`` and Dirichlet conditions ``v(0) = v(R) = 0`` the
discrete operator is the symmetric matrix ``S - Q G Q`` where ``S`` is
tridiagonal, ``Q = diag(rho U)`` and ``G`` is the node-sum discretization
of the multipole kernel.  ``G`` has the generator form
``a_min(j,k) b_max(j,k)``, so its inverse ``T`` is tridiagonal.  Shifted
solves then reduce to a sparse block system ``[[S - sigma, Q], [Q, T]]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh, splu

from ._validation import check_int, check_positive
from .exceptions import ConfigError, KernelCountMismatch
from .radial import GroundState, RadialGrid, radial_newton_transform

__all__ = [
    "SectorOperator",
    "SectorSpectrum",
    "SpectrumReport",
    "sector_operator",
    "apply_sector_operator",
    "sector_matrices",
    "sector_eigenpairs",
    "nondegeneracy_report",
    "zero_tolerance",
]


@dataclass
class SectorOperator:
    """Discretized ``A_l`` on a uniform radial grid with Dirichlet truncation."""

    ell: int
    grid: RadialGrid
    U: np.ndarray
    Psi: np.ndarray
    dU: np.ndarray
    boundary: str = "dirichlet: v(0) = v(R) = 0 with v = rho f"

    @property
    def interior(self) -> np.ndarray:
        return self.grid.rho[1:-1]


def sector_operator(gs: GroundState, ell: int, h: float = 1e-2, R: float = 40.0) -> SectorOperator:
    """Sample the ground state on a spectral grid of spacing ``h`` and radius ``R``."""
    ell = check_int(ell, "ell", 0)
    check_positive(h, "h")
    if R > gs.grid.R_rad:
        raise ConfigError(f"truncation radius {R} exceeds the ground-state grid {gs.grid.R_rad}")
    grid = RadialGrid.from_extent(h, R)
    r = grid.rho
    return SectorOperator(ell=ell, grid=grid, U=gs.U_at(r), Psi=gs.Psi_at(r), dU=gs.dU_at(r))


def apply_sector_operator(op: SectorOperator, f) -> np.ndarray:
    """Apply ``A_l`` to radial samples ``f`` (the value at ``R`` is taken as 0).

    The value returned at the origin node is the limit implied by
    ``f ~ rho^l``: zero for ``l >= 1`` and a quadratic extrapolation for
    ``l = 0``.
    """
    grid = op.grid
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n,):
        raise ValueError(f"f has shape {f.shape}, expected ({grid.n},)")
    rho = grid.rho
    h = grid.h
    v = rho * f
    v[-1] = 0.0
    fz = f.copy()
    fz[-1] = 0.0
    r = rho[1:-1]
    lap = -(v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
    local = (op.ell * (op.ell + 1) / r**2 + 1.0 - op.Psi[1:-1]) * v[1:-1]
    nonlocal_ = op.U * radial_newton_transform(op.U * fz, op.ell, grid, rule="green")
    out = np.zeros_like(f)
    out[1:-1] = (lap + local) / r - nonlocal_[1:-1]
    if op.ell == 0:
        out[0] = 3.0 * out[1] - 3.0 * out[2] + out[3]
    return out


def _generator(op: SectorOperator):
    r = op.interior
    ell = op.ell
    a = op.grid.h / (2 * ell + 1) * r**ell
    b = r ** (-(ell + 1))
    return a, b


def sector_matrices(op: SectorOperator):
    """Return ``(S, q, T)``: sparse tridiagonal ``S``, ``q = rho U``, sparse ``T = G^-1``."""
    r = op.interior
    n = r.size
    h = op.grid.h
    diag = 2.0 / h**2 + op.ell * (op.ell + 1) / r**2 + 1.0 - op.Psi[1:-1]
    off = np.full(n - 1, -1.0 / h**2)
    S = sp.diags([off, diag, off], [-1, 0, 1], format="csc")
    q = r * op.U[1:-1]

    a, b = _generator(op)
    D = a[1:] * b[:-1] - a[:-1] * b[1:]
    td = np.empty(n)
    td[0] = a[1] / (a[0] * D[0])
    td[-1] = b[-2] / (b[-1] * D[-1])
    td[1:-1] = (a[:-2] / D[:-1] + a[2:] / D[1:]) / a[1:-1]
    T = sp.diags([-1.0 / D, td, -1.0 / D], [-1, 0, 1], format="csc")
    return S, q, T


def _matvec(op: SectorOperator, v: np.ndarray) -> np.ndarray:
    """Symmetric interior form ``(S - Q G Q) v``."""
    f = np.zeros(op.grid.n)
    f[1:-1] = v / op.interior
    return op.interior * apply_sector_operator(op, f)[1:-1]


def _dense(op: SectorOperator) -> np.ndarray:
    S, q, _ = sector_matrices(op)
    a, b = _generator(op)
    idx = np.arange(q.size)
    lo = np.minimum.outer(idx, idx)
    hi = np.maximum.outer(idx, idx)
    G = a[lo] * b[hi]
    return S.toarray() - q[:, None] * G * q[None, :]


def zero_tolerance(h: float, psi_max: float) -> float:
    """Scale below which a discrete eigenvalue counts as zero."""
    return 10.0 * h**2 * (1.0 + psi_max)


def sector_eigenpairs(op: SectorOperator, k: int = 4, method: str = "auto", shift: float = 0.0):
    """The ``k`` eigenpairs of smallest ``|mu - shift|``; vectors in ``v = rho f`` form."""
    k = check_int(k, "k", 1)
    n = op.interior.size
    if method == "auto":
        method = "dense" if n <= 2000 else "shift-invert"
    if method == "dense":
        A = _dense(op)
        w, V = sla.eigh(A)
        order = np.argsort(np.abs(w - shift), kind="stable")[:k]
        w, V = w[order], V[:, order]
    elif method == "shift-invert":
        S, q, T = sector_matrices(op)
        Qm = sp.diags(q, format="csc")
        B = sp.bmat([[S - shift * sp.identity(n, format="csc"), Qm], [Qm, T]], format="csc")
        lu = splu(B)

        def opinv(x):
            rhs = np.concatenate([np.ravel(x), np.zeros(n)])
            return lu.solve(rhs)[:n]

        A = LinearOperator((n, n), matvec=lambda x: _matvec(op, np.ravel(x)), dtype=float)
        OPinv = LinearOperator((n, n), matvec=opinv, dtype=float)
        v0 = op.interior * np.exp(-op.interior)
        w, V = eigsh(A, k=k, sigma=shift, which="LM", OPinv=OPinv, v0=v0, tol=1e-13)
        order = np.argsort(np.abs(w - shift), kind="stable")
        w, V = w[order], V[:, order]
    else:
        raise ConfigError(f"unknown eigen method {method!r}")
    # deterministic sign: largest component positive
    for j in range(V.shape[1]):
        i = np.argmax(np.abs(V[:, j]))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return w, V


@dataclass
class SectorSpectrum:
    ell: int
    eigenvalues: list
    residuals: list
    kernel_overlap: float | None
    n_small: int

    def to_json(self) -> dict:
        return {
            "l": self.ell,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "kernel_overlap": None if self.kernel_overlap is None else float(self.kernel_overlap),
        }


@dataclass
class SpectrumReport:
    h: float
    R: float
    tol: float
    sectors: list
    truncation: dict = field(default_factory=dict)
    passed: bool = True
    failures: list = field(default_factory=list)

    def sector(self, ell: int) -> SectorSpectrum:
        for s in self.sectors:
            if s.ell == ell:
                return s
        raise KeyError(ell)

    def smallest_abs(self, ell: int) -> float:
        return float(min(abs(x) for x in self.sector(ell).eigenvalues))

    def to_json(self) -> list:
        return [s.to_json() for s in self.sectors]


def nondegeneracy_report(
    gs: GroundState,
    ell_max: int = 3,
    k: int = 4,
    tol: float | None = None,
    *,
    h: float = 1e-2,
    R: float = 40.0,
    method: str = "auto",
    truncation_radii=(30.0,),
    strict: bool = True,
) -> SpectrumReport:
    """Check that the only near-zero modes are the translations (sector ``l = 1``).

    Each sector is solved independently and sequentially.  Truncation
    sensitivity is reported as the smallest ``|mu|`` per sector at each
    radius in ``truncation_radii``.
    """
    ell_max = check_int(ell_max, "ell_max", 2)
    k = check_int(k, "k", 3)
    tol = zero_tolerance(h, float(np.max(gs.Psi))) if tol is None else check_positive(tol, "tol")
    sectors = []
    failures = []
    for ell in range(ell_max + 1):
        op = sector_operator(gs, ell, h, R)
        w, V = sector_eigenpairs(op, k, method)
        res = []
        for j in range(w.size):
            v = V[:, j]
            res.append(float(np.linalg.norm(_matvec(op, v) - w[j] * v) / np.linalg.norm(v)))
        n_small = int(np.sum(np.abs(w) <= tol))
        overlap = None
        if ell == 1:
            j0 = int(np.argmin(np.abs(w)))
            t = op.interior * op.dU[1:-1]
            overlap = float(abs(V[:, j0] @ t) / (np.linalg.norm(V[:, j0]) * np.linalg.norm(t)))
        expected = 1 if ell == 1 else 0
        if n_small != expected:
            failures.append(KernelCountMismatch(ell, w, expected, tol))
        sectors.append(SectorSpectrum(ell, [float(x) for x in w], res, overlap, n_small))

    truncation = {}
    for Rt in truncation_radii:
        row = {}
        for ell in range(ell_max + 1):
            w, _ = sector_eigenpairs(sector_operator(gs, ell, h, Rt), 1, method)
            row[ell] = float(abs(w[0]))
        truncation[float(Rt)] = row
    truncation[float(R)] = {s.ell: float(min(abs(x) for x in s.eigenvalues)) for s in sectors}

    report = SpectrumReport(h=h, R=R, tol=tol, sectors=sectors, truncation=truncation,
                            passed=not failures, failures=failures)
    if strict and failures:
        raise failures[0]
    return report

