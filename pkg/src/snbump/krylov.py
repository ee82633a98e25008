"""Preconditioned MINRES that keeps its Lanczos coefficients.

The recurrence follows Paige and Saunders (the same one scipy uses), with
a user inner product and field-shaped vectors.  The Lanczos tridiagonal
gives Ritz and harmonic Ritz values of the preconditioned operator; the
smallest harmonic one in modulus serves as the estimate of the
inverse-bound constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .exceptions import InnerSolveStalled

__all__ = ["MinresResult", "minres"]


@dataclass
class MinresResult:
    x: np.ndarray
    iterations: int
    converged: bool
    residual_history: list = field(default_factory=list)
    alphas: list = field(default_factory=list)
    betas: list = field(default_factory=list)

    def ritz_values(self) -> np.ndarray:
        k = len(self.alphas)
        if k == 0:
            return np.array([])
        return eigvalsh_tridiagonal(np.array(self.alphas), np.array(self.betas[: k - 1]))

    def harmonic_ritz_values(self) -> np.ndarray:
        """Eigenvalues of ``T_k + beta_{k+1}^2 T_k^-1 e_k e_k^T``.

        For symmetric operators these never come closer to zero than the
        eigenvalue of smallest modulus, so they bound it from above.
        """
        k = len(self.alphas)
        if k == 0:
            return np.array([])
        T = np.diag(self.alphas) + np.diag(self.betas[: k - 1], 1) + np.diag(self.betas[: k - 1], -1)
        ek = np.zeros(k)
        ek[-1] = 1.0
        try:
            y = np.linalg.solve(T, ek)
        except np.linalg.LinAlgError:
            return np.zeros(1)
        H = T + self.betas[k - 1] ** 2 * np.outer(y, ek)
        return np.real(np.linalg.eigvals(H))

    @property
    def ritz_min(self) -> float:
        rv = self.ritz_values()
        return float(np.min(np.abs(rv))) if rv.size else float("nan")

    @property
    def harmonic_ritz_min(self) -> float:
        hv = self.harmonic_ritz_values()
        return float(np.min(np.abs(hv))) if hv.size else float("nan")

    @property
    def relative_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else 0.0


def minres(
    A: Callable,
    b: np.ndarray,
    *,
    dot: Callable,
    M: Callable | None = None,
    x0: np.ndarray | None = None,
    rtol: float = 1e-8,
    maxiter: int = 500,
    stall_window: int = 60,
    stall_factor: float = 0.9,
    raise_on_stall: bool = True,
) -> MinresResult:
    """Solve ``A x = b`` for symmetric ``A`` with symmetric semidefinite preconditioner ``M``.

    Convergence is declared when the preconditioned residual norm falls
    below ``rtol`` times its initial value.  A plateau (less than a factor
    ``stall_factor`` of progress over ``stall_window`` iterations) or
    running out of iterations raises ``InnerSolveStalled`` carrying the
    smallest harmonic Ritz value.
    """
    M = (lambda v: v) if M is None else M
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float, copy=True)
    r1 = b - A(x) if x0 is not None else b.copy()
    y = M(r1)
    beta1 = dot(r1, y)
    if beta1 < 0:
        raise ValueError("preconditioner is not positive semidefinite")
    beta1 = math.sqrt(beta1)
    out = MinresResult(x=x, iterations=0, converged=True, residual_history=[0.0 if beta1 == 0 else 1.0])
    if beta1 == 0.0:
        return out

    oldb = 0.0
    beta = beta1
    dbar = 0.0
    epsln = 0.0
    phibar = beta1
    cs, sn = -1.0, 0.0
    w = np.zeros_like(b)
    w2 = np.zeros_like(b)
    r2 = r1
    eps = np.finfo(float).eps
    hist = out.residual_history
    converged = False
    itn = 0
    for itn in range(1, maxiter + 1):
        v = y / beta
        y = A(v)
        if itn >= 2:
            y = y - (beta / oldb) * r1
        alfa = dot(v, y)
        y = y - (alfa / beta) * r2
        r1 = r2
        r2 = y
        y = M(r2)
        oldb = beta
        bb = dot(r2, y)
        if bb < 0:
            raise ValueError("preconditioner is not positive semidefinite")
        beta = math.sqrt(bb)
        out.alphas.append(alfa)
        out.betas.append(beta)

        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(math.hypot(gbar, beta), eps)
        cs = gbar / gamma
        sn = beta / gamma
        phi = cs * phibar
        phibar = sn * phibar

        w1 = w2
        w2 = w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x = x + phi * w
        rel = phibar / beta1
        hist.append(rel)
        if rel <= rtol:
            converged = True
            break
        if beta <= eps * beta1:
            # Krylov space exhausted: x is the exact solution on it
            converged = True
            break
        if itn > stall_window and hist[-1] > stall_factor * hist[-1 - stall_window]:
            break

    out.x = x
    out.iterations = itn
    out.converged = converged
    if not converged and raise_on_stall:
        raise InnerSolveStalled(
            f"MINRES stalled at relative residual {hist[-1]:.2e} after {itn} iterations",
            out.harmonic_ritz_min,
        )
    return out
