"""Extremal solutions of the passivity Riccati equation.

``Ricc(X) = -X A - A^T X - (C^T - X B)(D^T + D)^{-1}(C - B^T X) = 0``

With ``Y = -X`` this is the standard continuous ARE with ``q = 0``,
``r = D^T + D`` and cross term ``s = C^T``. It is solved through scipy's
extended-pencil QZ method, which never forms ``(D^T + D)^{-1}`` and so stays
accurate when ``D^T + D`` is nearly singular, where the explicit Hamiltonian
loses its eigenvalues to cancellation. The antistabilizing solution is
``-(stabilizing solution for {-A, B, -C, D})`` with the sign flip undone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .exceptions import (
    AsymmetricSolution,
    ImaginaryAxisEigenvalues,
    InvariantViolation,
    NotMinimal,
    ResidualTooLarge,
    SingularU1,
)
from .model import StateSpaceModel, assemble_hamiltonian, assemble_pencil, lam_min, sym

STABILIZING = "stabilizing"
ANTISTABILIZING = "antistabilizing"


@dataclass(frozen=True, eq=False)
class AreSolution:
    X: np.ndarray
    residual: float
    relative_residual: float
    closed_loop_eigs: np.ndarray
    mode: str


def riccati_residual(M: StateSpaceModel, X) -> np.ndarray:
    A, B, C, D = M.matrices()
    Z = D.T + D
    L = C.T - X @ B
    return -X @ A - A.T @ X - L @ np.linalg.solve(Z, L.T)


def _residual_scale(M, X):
    A, B, C, D = M.matrices()
    L = C.T - X @ B
    quad = L @ np.linalg.solve(D.T + D, L.T)
    return (1.0 + np.linalg.norm(X)) * (1.0 + np.linalg.norm(A)) + np.linalg.norm(quad)


def solve_are(
    M: StateSpaceModel,
    mode: str = STABILIZING,
    axis_tol: float = 1e-8,
    residual_tol: float = 1e-8,
) -> AreSolution:
    """Solve the Riccati equation from the stable or antistable Hamiltonian subspace.

    Parameters
    ----------
    M : StateSpaceModel
        Needs ``D^T + D`` nonsingular and no imaginary-axis Hamiltonian
        eigenvalues (strict passivity).
    mode : {"stabilizing", "antistabilizing"}
        ``"stabilizing"`` gives the minimal solution ``X_-``, whose closed
        loop ``A - B F`` is Hurwitz; ``"antistabilizing"`` gives ``X_+``.
    axis_tol : float
        Eigenvalues of the (well-scaled) system pencil with
        ``|Re| <= axis_tol * scale`` count as on the axis. The Hamiltonian
        itself grows like ``1/lambda_min(D^T + D)`` and is not used for this test.
    residual_tol : float
        Bound on ``||Ricc(X)||_F`` relative to the size of its terms.

    Raises
    ------
    SingularDBlock, ImaginaryAxisEigenvalues, SingularU1, AsymmetricSolution,
    ResidualTooLarge, NotMinimal
    """
    if mode not in (STABILIZING, ANTISTABILIZING):
        raise ValueError(f"unknown mode {mode!r}")
    if M.minimal is False:
        raise NotMinimal("the Riccati solution requires a minimal model")
    A, B, C, D = M.matrices()
    Z = D.T + D
    assemble_hamiltonian(M, 0.0)  # raises SingularDBlock
    pencil = assemble_pencil(M, 0.0)
    spec = pencil.spectrum
    if not spec.regular or np.any(np.abs(spec.finite.real) <= axis_tol * pencil.scale):
        raise ImaginaryAxisEigenvalues(
            "Hamiltonian has eigenvalues on the imaginary axis; the model is not strictly passive"
        )
    sgn = 1.0 if mode == STABILIZING else -1.0
    try:
        Y = sla.solve_continuous_are(sgn * A, B, np.zeros_like(A), Z, s=sgn * C.T, balanced=True)
    except np.linalg.LinAlgError as exc:
        if "finite" in str(exc) or "singular" in str(exc).lower():
            raise SingularU1(f"invariant subspace is not a graph subspace ({exc})") from exc
        raise ImaginaryAxisEigenvalues(str(exc)) from exc
    X = -sgn * Y
    nx = np.linalg.norm(X)
    if np.linalg.norm(X - X.T) > 1e-6 * max(nx, np.finfo(float).tiny):
        raise AsymmetricSolution("Riccati solution is far from symmetric")
    X = sym(X)
    res = float(np.linalg.norm(riccati_residual(M, X)))
    rel = res / _residual_scale(M, X)
    if rel > residual_tol:
        raise ResidualTooLarge(f"relative Riccati residual {rel:.2e} exceeds {residual_tol:.1e}")
    F = np.linalg.solve(Z, C - B.T @ X)
    closed = np.sort_complex(np.linalg.eigvals(A - B @ F))
    return AreSolution(X, res, rel, closed, mode)


def extremal_solutions(M: StateSpaceModel, axis_tol: float = 1e-8, residual_tol: float = 1e-8,
                       order_tol: float = 1e-8):
    """``(X_-, X_+)``: the stabilizing and antistabilizing solutions.

    ``X_- <= X_+`` is checked in the semidefinite order.
    """
    if M.minimal is False:
        raise NotMinimal("extremal solutions require a minimal model")
    lo = solve_are(M, STABILIZING, axis_tol, residual_tol)
    hi = solve_are(M, ANTISTABILIZING, axis_tol, residual_tol)
    gap = lam_min(hi.X - lo.X)
    if gap < -order_tol * max(1.0, np.linalg.norm(hi.X)):
        raise InvariantViolation(f"X_+ - X_- has eigenvalue {gap:.3e} < 0")
    return lo, hi
