"""Distance to passivity and distance to stability.

The first stage is a pure diagonal shift; the second stage rescales the
problem with a certificate ``X = T^T T`` and replaces the diagonal shift by
the smallest Hermitian correction that restores semidefiniteness, spread
over the entries so the Frobenius norm drops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import _kernels
from .exceptions import (
    ConstraintViolated,
    ConvergenceFailure,
    DimensionMismatch,
    NotMinimal,
    NotPositiveDefinite,
    NotStable,
    PassivityError,
)
from .model import (
    Certificate,
    StateSpaceModel,
    assemble_w,
    certify,
    lam_min,
    shift_model,
    spectral_abscissa,
    sym,
)
from .optimal import DEFAULT_AXIS_TOL, DEFAULT_TAU, passivity_status
from .radius import StructuredPerturbation, apply_perturbation, golden_section
from .riccati import STABILIZING, solve_are

MAX_DOUBLINGS = 200
DEFAULT_CERT_RTOL = 1e-10


# ------------------------------------------------------------- refinement core

@dataclass(frozen=True, eq=False)
class Refinement:
    """Second-stage correction in rotated and original coordinates.

    ``delta_s`` is the perturbation in ``[[-dA, -dB], [dC, dD]]`` form.
    ``R_tilde`` is the rotated symmetric part and ``dR_tilde`` its negative
    part (as a PSD matrix); ``sigma`` are the singular values of ``T_hat``.
    """

    delta_s: np.ndarray
    delta_rot: np.ndarray
    R_tilde: np.ndarray
    dR_tilde: np.ndarray
    sigma: np.ndarray
    V_hat: np.ndarray


def negative_part(R, tol=0.0):
    """PSD ``dR`` with ``R + dR = R_+``; eigenvalues in ``(-tol, 0]`` are left alone."""
    w, U = np.linalg.eigh(sym(R))
    d = np.where(w < -tol, -w, 0.0)
    return sym((U * d) @ U.T)


def pairwise_solution(dR, sigma):
    """Minimum-Frobenius ``D`` with ``sym(S D S^-1) = dR``, ``S = diag(sigma)``.

    Each off-diagonal pair solves ``a x + b y = 2 r`` with ``a = s_i/s_j``,
    ``b = s_j/s_i``; the diagonal is fixed at ``r_ii``.
    """
    s = np.asarray(sigma, dtype=float)
    ratio = s[:, None] / s[None, :]
    a = ratio
    b = ratio.T
    out = 2.0 * dR * a / (a * a + b * b)
    np.fill_diagonal(out, np.diag(dR))
    return out


def triangular_solution(dR, sigma):
    """The strictly-lower-plus-diagonal construction, for comparison.

    ``Y = 2 tril(dR, -1) + diag(dR)`` satisfies ``Y + Y^T = 2 dR``; the
    perturbation in rotated coordinates is ``S^-1 Y S``.
    """
    s = np.asarray(sigma, dtype=float)
    Y = 2.0 * np.tril(dR, -1) + np.diag(np.diag(dR))
    return (Y / s[:, None]) * s[None, :]


def _upper_factor(X):
    try:
        return np.linalg.cholesky(sym(X)).T
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("certificate X is not positive definite") from exc


def refine_core(W, T_hat, tol=0.0, construction="pairwise") -> Refinement:
    """Minimal correction for ``W + X_hat D + D^T X_hat >= 0`` with ``X_hat = T_hat^T T_hat``.

    With ``T_hat = U^T diag(sigma) V`` the condition becomes
    ``R~ + sym(diag(sigma) D~ diag(sigma)^-1) >= 0`` where ``R~ = U T_hat^-T W T_hat^-1 U^T / 2``
    and ``D~ = V D V^T``.
    """
    U, sigma, Vh = np.linalg.svd(T_hat)
    U_hat = U.T
    Ti = np.linalg.inv(T_hat)
    R_hat = 0.5 * sym(Ti.T @ W @ Ti)
    R_tilde = sym(U_hat @ R_hat @ U_hat.T)
    dR = negative_part(R_tilde, tol)
    if construction == "pairwise":
        D_rot = pairwise_solution(dR, sigma)
    elif construction == "triangular":
        D_rot = triangular_solution(dR, sigma)
    else:
        raise ValueError(f"unknown construction {construction!r}")
    delta_s = Vh.T @ D_rot @ Vh
    return Refinement(delta_s, D_rot, R_tilde, dR, sigma, Vh)


# ---------------------------------------------------------- distance to passivity

@dataclass(frozen=True, eq=False)
class PassivationResult:
    """Diagonal shift ``xi`` and the perturbations that make a model passive.

    ``diagonal_perturbation`` is ``Delta_S = (xi/2) I``. ``refined_perturbation``
    and ``certificate`` (for the refined model) are filled by
    :func:`passify`. ``binding`` names the conditions (``"A1'"``, ``"A2'"``,
    ``"A3'"``) that fail just below ``xi``.
    """

    xi: float
    xi_lo: float
    iterations: int
    binding: tuple
    diagonal_perturbation: StructuredPerturbation
    refined_perturbation: StructuredPerturbation | None = None
    certificate: Certificate | None = None
    construction_norm: float | None = None

    @property
    def spectral_norm(self):
        return self.diagonal_perturbation.norm_2

    @property
    def frobenius_diagonal(self):
        return self.diagonal_perturbation.norm_F

    @property
    def frobenius_refined(self):
        return None if self.refined_perturbation is None else self.refined_perturbation.norm_F


def _shift_status(M, xi, axis_tol):
    return passivity_status(shift_model(M, -xi), 0.0, axis_tol)


def _failing(st):
    names = []
    if not st.a1:
        names.append("A1'")
    if not st.a2:
        names.append("A2'")
    if not st.a3:
        names.append("A3'")
    return tuple(names)


def passivation_diagonal(
    M: StateSpaceModel, tau: float = DEFAULT_TAU, axis_tol: float = DEFAULT_AXIS_TOL
) -> PassivationResult:
    """Smallest shift ``xi`` (within ``tau``) making ``{A - xi/2 I, B, C, D + xi/2 I}`` strictly passive.

    The lower bracket is where A1' and A2' start to hold; the upper bracket
    is found by doubling. The returned ``xi`` is the passive end of the final
    bracket, so the shifted model is strictly passive.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if M.minimal is False:
        raise NotMinimal("distance to passivity requires a minimal model")
    n, m = M.n, M.m
    if passivity_status(M, 0.0, axis_tol).strictly_passive:
        return PassivationResult(0.0, 0.0, 0, (), StructuredPerturbation.zero(n, m))
    bound_a1 = 2.0 * spectral_abscissa(M.A)
    bound_a2 = -lam_min(M.D.T + M.D)
    lo = max(bound_a1, bound_a2, 0.0)
    hi = lo + max(tau, 1e-3 * max(1.0, lo))
    for _ in range(MAX_DOUBLINGS):
        if _shift_status(M, hi, axis_tol).strictly_passive:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConvergenceFailure("no passivating shift found while doubling")
    it = 0
    while hi - lo > tau:
        it += 1
        mid = 0.5 * (lo + hi)
        if _shift_status(M, mid, axis_tol).strictly_passive:
            hi = mid
        else:
            lo = mid
    binding = _failing(_shift_status(M, lo, axis_tol))
    if not binding:
        # lo sits on an analytic bound that passes only through rounding.
        binding = tuple(name for name, b in (("A1'", bound_a1), ("A2'", bound_a2)) if hi - b <= tau)
    pert = StructuredPerturbation.from_delta_s(0.5 * hi * np.eye(n + m), n)
    return PassivationResult(hi, lo, it, binding, pert)


def refinement_certificate(
    M: StateSpaceModel,
    xi: float,
    xi_lo: float = 0.0,
    rel_tol: float = DEFAULT_CERT_RTOL,
    axis_tol: float = DEFAULT_AXIS_TOL,
) -> np.ndarray:
    """Default certificate for the refinement stage.

    The bracket ``[xi_lo, xi]`` (``xi`` passive) is narrowed to a relative
    width ``rel_tol`` and the stabilizing Riccati solution of the model
    shifted by the passive end is returned. The refined norm grows with the
    shift the certificate is valid for, so a tight bracket matters.
    """
    lo, hi = float(xi_lo), float(xi)
    while hi - lo > rel_tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if _shift_status(M, mid, axis_tol).strictly_passive:
            hi = mid
        else:
            lo = mid
    step = hi - lo
    while True:
        try:
            return solve_are(shift_model(M, -hi), STABILIZING, axis_tol=axis_tol).X
        except PassivityError:
            # Too close to the boundary for the solver; back off towards xi.
            if hi >= xi:
                raise
            step *= 10.0
            hi = min(hi + step, xi)


def passivation_refine(
    M: StateSpaceModel,
    xi: float,
    X=None,
    tol: float = 1e-9,
    construction: str = "pairwise",
    xi_lo: float = 0.0,
) -> StructuredPerturbation:
    """Frobenius-norm refinement of the diagonal shift.

    Parameters
    ----------
    M : StateSpaceModel
    xi : float
        Diagonal shift from :func:`passivation_diagonal`.
    X : array_like or Certificate, optional
        Certificate with ``W(X, M_{-xi}) >= 0``. Defaults to
        :func:`refinement_certificate` on ``[xi_lo, xi]``.
    tol : float
        Relative tolerance for the spectral split and the final check
        ``lambda_min(W(X, M + Delta)) >= -tol * ||W||``.

    Raises
    ------
    NotPositiveDefinite, ConstraintViolated
    """
    n, m = M.n, M.m
    if xi <= 0.0:
        return StructuredPerturbation.zero(n, m)
    if X is None:
        X = refinement_certificate(M, xi, xi_lo)
    Xm = X.X if isinstance(X, Certificate) else np.atleast_2d(np.asarray(X, dtype=float))
    if Xm.shape != (n, n):
        raise DimensionMismatch(f"X has shape {Xm.shape}, expected {(n, n)}")
    T = _upper_factor(Xm)
    W = assemble_w(M, Xm)
    scale = max(1.0, np.linalg.norm(W, 2))
    ref = refine_core(W, sla.block_diag(T, np.eye(m)), tol * scale, construction)
    pert = StructuredPerturbation.from_delta_s(ref.delta_s, n)
    check_refined(M, Xm, pert, tol)
    return pert


def check_refined(M, X, pert, tol=1e-9):
    Xhat = sla.block_diag(X, np.eye(M.m))
    W = assemble_w(M, X)
    E = Xhat @ pert.as_delta_s
    lw = lam_min(W + E + E.T)
    scale = max(1.0, np.linalg.norm(W, 2))
    if lw < -tol * scale:
        raise ConstraintViolated(f"refined model leaves lambda_min(W) = {lw:.3e}")
    return lw


def passify(
    M: StateSpaceModel,
    tau: float = DEFAULT_TAU,
    axis_tol: float = DEFAULT_AXIS_TOL,
    X=None,
    tol: float = 1e-9,
) -> PassivationResult:
    """Both stages; ``certificate`` certifies the refined model."""
    diag = passivation_diagonal(M, tau, axis_tol)
    if diag.xi == 0.0:
        return diag
    if X is None:
        X = refinement_certificate(M, diag.xi, diag.xi_lo, axis_tol=axis_tol)
    Xm = X.X if isinstance(X, Certificate) else np.atleast_2d(np.asarray(X, dtype=float))
    refined = passivation_refine(M, diag.xi, Xm, tol)
    tri = passivation_refine(M, diag.xi, Xm, tol, construction="triangular")
    cert = certify(apply_perturbation(M, refined), Xm, tol)
    return PassivationResult(
        diag.xi, diag.xi_lo, diag.iterations, diag.binding, diag.diagonal_perturbation,
        refined, cert, tri.norm_F,
    )


# --------------------------------------------------------- distance to stability

@dataclass(frozen=True, eq=False)
class StabilizationResult:
    xi: float
    A_stab: np.ndarray
    dA: np.ndarray

    @property
    def spectral_norm(self):
        return float(np.linalg.norm(self.dA, 2))

    @property
    def frobenius_norm(self):
        return float(np.linalg.norm(self.dA))


def _square(A):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got shape {A.shape}")
    return A


def stabilization_diagonal(A) -> StabilizationResult:
    """``xi = max(2 max Re lambda(A), 0)`` and ``A - xi/2 I``."""
    A = _square(A)
    xi = max(2.0 * spectral_abscissa(A), 0.0)
    dA = -0.5 * xi * np.eye(A.shape[0])
    return StabilizationResult(xi, A + dA, dA)


def stability_certificate(A, xi: float, shift: float = 1e-10, cond_max: float = 1e8) -> np.ndarray:
    """``X > 0`` with ``-(A - xi/2 I)^T X - X (A - xi/2 I) >= 0``.

    Uses ``X = V^-H V^-1`` from an eigenvector basis when it is well
    conditioned, otherwise a Lyapunov solution for the shift ``xi + shift``.
    """
    A = _square(A)
    n = A.shape[0]
    _, V = np.linalg.eig(A)
    if np.linalg.cond(V) <= cond_max:
        Vi = np.linalg.inv(V)
        return sym((Vi.conj().T @ Vi).real)
    As = A - 0.5 * (xi + shift) * np.eye(n)
    return sym(sla.solve_continuous_lyapunov(As.T, -np.eye(n)))


def stabilization_refine(A, xi: float, X=None, tol: float = 1e-9, construction: str = "pairwise") -> np.ndarray:
    """Frobenius-norm refinement ``dA`` of the stabilizing shift, given ``X`` for ``A - xi/2 I``."""
    A = _square(A)
    n = A.shape[0]
    if xi <= 0.0:
        return np.zeros_like(A)
    if X is None:
        X = stability_certificate(A, xi)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape != (n, n):
        raise DimensionMismatch(f"X has shape {X.shape}, expected {(n, n)}")
    T = _upper_factor(X)
    W = -(A.T @ X + X @ A)
    scale = max(1.0, np.linalg.norm(W, 2))
    ref = refine_core(W, T, tol * scale, construction)
    dA = -ref.delta_s
    lw = lam_min(W - dA.T @ X - X @ dA)
    if lw < -tol * scale:
        raise ConstraintViolated(f"refined matrix leaves lambda_min = {lw:.3e}")
    return dA


@dataclass(frozen=True, eq=False)
class StabilityRadius:
    """``min_omega sigma_min(A - i omega I)`` with its minimizer and destabilizer.

    ``destabilizer = -sigma u v^H`` puts ``i omega`` in the spectrum of
    ``A + destabilizer``.
    """

    radius: float
    omega: float
    u: np.ndarray
    v: np.ndarray
    destabilizer: np.ndarray


def stability_radius(A, n_grid: int = 2001, omega_max: float | None = None, tol: float = 1e-12,
                     backend=None) -> StabilityRadius:
    """Distance to instability of a Hurwitz ``A``.

    A grid over ``[0, omega_max]`` (linear plus logarithmic points, default
    ``omega_max = 2 ||A||``) locates the minimum, which a golden-section
    search then refines. ``A`` is real, so negative frequencies are mirror images.
    """
    A = _square(A)
    n = A.shape[0]
    if not spectral_abscissa(A) < 0.0:
        raise NotStable(f"spectral abscissa {spectral_abscissa(A):.3e} is not negative")
    if omega_max is None:
        omega_max = 2.0 * np.linalg.norm(A, 2)
    lin = np.linspace(0.0, omega_max, n_grid)
    logs = np.logspace(np.log10(omega_max) - 8.0, np.log10(omega_max), n_grid)
    grid = np.unique(np.concatenate([lin, logs, np.abs(np.linalg.eigvals(A).imag)]))
    grid = grid[grid <= omega_max]
    vals = _kernels.sigma_min_grid(A, grid, backend)
    k = int(np.argmin(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    I = np.eye(n)

    def smin(w):
        return float(np.linalg.svd(A - 1j * w * I, compute_uv=False)[-1])

    if hi > lo:
        w, s, _ = golden_section(smin, lo, hi, tol=tol * max(1.0, omega_max), max_iter=400)
        if vals[k] < s:
            w, s = grid[k], vals[k]
    else:
        w, s = grid[k], vals[k]
    U, S, Vh = np.linalg.svd(A - 1j * w * I)
    u, v = U[:, -1], Vh[-1].conj()
    dA = -S[-1] * np.outer(u, v.conj())
    if w == 0.0:
        dA = dA.real
    return StabilityRadius(float(S[-1]), float(w), u, v, dA)
