"""State-space and port-Hamiltonian data model.

Everything here is a pure function of its inputs. Models are real
``{A, B, C, D}`` quadruples with square ``D`` (as many inputs as outputs).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from . import _kernels
from .exceptions import (
    ComplexModelError,
    DimensionMismatch,
    InfeasibleCertificate,
    InvariantViolation,
    NonFiniteEntry,
    NotPositiveDefinite,
    ResolventSingular,
    SingularDBlock,
)

DEFAULT_RANK_TOL = 1e-9
DEFAULT_CERT_TOL = 1e-9
_EPS = np.finfo(float).eps


def sym(M):
    """Symmetric part ``(M + M^T)/2``."""
    return 0.5 * (M + M.T)


def lam_min(M):
    """Smallest eigenvalue of the symmetric part of ``M``."""
    return float(np.linalg.eigvalsh(sym(M))[0])


def spectral_abscissa(A):
    return float(np.max(np.linalg.eigvals(A).real))


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _as_real_matrix(name, value):
    arr = np.asarray(value)
    if np.iscomplexobj(arr):
        raise ComplexModelError(f"{name} is complex; only real models are supported")
    try:
        arr = np.atleast_2d(np.asarray(arr, dtype=float))
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(f"{name} is not a numeric matrix") from exc
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEntry(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Real LTI model ``x' = Ax + Bu, y = Cx + Du``.

    ``minimal`` is ``None`` when the rank tests have not been run.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    minimal: bool | None = None

    def __post_init__(self):
        for name in "ABCD":
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.D.shape[0]

    def matrices(self):
        return self.A, self.B, self.C, self.D

    def allclose(self, other, rtol=0.0, atol=1e-12):
        return all(
            x.shape == y.shape and np.allclose(x, y, rtol=rtol, atol=atol)
            for x, y in zip(self.matrices(), other.matrices())
        )

    def to_dict(self):
        return {
            "n": self.n,
            "m": self.m,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "D": self.D.tolist(),
        }


def kalman_rank(A, B, rank_tol=DEFAULT_RANK_TOL):
    """Numerical rank of ``[B, AB, ..., A^{n-1}B]`` (``sigma_k > rank_tol*sigma_1``)."""
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    sv = np.linalg.svd(np.hstack(blocks), compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rank_tol * sv[0]))


def validate_model(A, B, C, D, rank_tol=DEFAULT_RANK_TOL) -> StateSpaceModel:
    """Check shapes and finiteness and run the controllability/observability tests.

    Parameters
    ----------
    A, B, C, D : array_like
        Real matrices of shapes (n, n), (n, m), (m, n), (m, m).
    rank_tol : float
        Relative singular-value threshold for the Kalman rank tests.

    Returns
    -------
    StateSpaceModel
        With ``minimal`` set. Inputs are copied, never mutated.
    """
    if not rank_tol > 0:
        raise ValueError("rank_tol must be positive")
    A, B, C, D = (_as_real_matrix(k, v) for k, v in zip("ABCD", (A, B, C, D)))
    n = A.shape[0]
    if A.shape != (n, n) or n == 0:
        raise DimensionMismatch(f"A must be square and non-empty, got {A.shape}")
    if B.shape[0] != n:
        raise DimensionMismatch(f"B has {B.shape[0]} rows, expected {n}")
    m = B.shape[1]
    if m == 0:
        raise DimensionMismatch("B must have at least one column")
    if C.shape != (m, n):
        raise DimensionMismatch(f"C has shape {C.shape}, expected {(m, n)}")
    if D.shape != (m, m):
        raise DimensionMismatch(f"D has shape {D.shape}, expected {(m, m)}")
    minimal = kalman_rank(A, B, rank_tol) == n and kalman_rank(A.T, C.T, rank_tol) == n
    return StateSpaceModel(A, B, C, D, minimal=minimal)


def _check_compatible(M, X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    if X.shape != (M.n, M.n):
        raise DimensionMismatch(f"X has shape {X.shape}, expected {(M.n, M.n)}")
    return X


def assemble_w(M: StateSpaceModel, X) -> np.ndarray:
    """KYP matrix ``[[-A^T X - X A, C^T - X B], [C - B^T X, D^T + D]]``."""
    X = _check_compatible(M, X)
    A, B, C, D = M.matrices()
    top_left = -A.T @ X - X @ A
    top_right = C.T - X @ B
    return np.block([[sym(top_left), top_right], [top_right.T, D.T + D]])


def shift_model(M: StateSpaceModel, xi: float) -> StateSpaceModel:
    """``{A + xi/2 I, B, C, D - xi/2 I}``; a negative ``xi`` moves the other way."""
    h = 0.5 * float(xi)
    return StateSpaceModel(
        M.A + h * np.eye(M.n), M.B, M.C, M.D - h * np.eye(M.m), minimal=M.minimal
    )


def _resolvent_check(M, s):
    eig = np.linalg.eigvals(M.A)
    if np.min(np.abs(s - eig)) <= _kernels.resolvent_tolerance(M.A):
        raise ResolventSingular(f"s = {s} is an eigenvalue of A")


def transfer(M: StateSpaceModel, s: complex, xi: float = 0.0) -> np.ndarray:
    """Shifted transfer function ``C((s - xi/2)I - A)^{-1}B + D - xi/2 I``."""
    s_shift = complex(s) - 0.5 * xi
    _resolvent_check(M, s_shift)
    try:
        Y = np.linalg.solve(s_shift * np.eye(M.n) - M.A, M.B.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise ResolventSingular(str(exc)) from exc
    return M.C @ Y + M.D - 0.5 * xi * np.eye(M.m)


def eval_gamma(M: StateSpaceModel, xi: float, omega: float):
    """Popov function of the shifted model on the imaginary axis.

    Returns
    -------
    Phi : ndarray, complex Hermitian (m, m)
        ``T_xi(i omega)^H + T_xi(i omega)``.
    gamma : float
        Smallest eigenvalue of ``Phi``.
    """
    T = transfer(M, 1j * float(omega), xi)
    Phi = T + T.conj().T
    Phi = 0.5 * (Phi + Phi.conj().T)
    return Phi, float(np.linalg.eigvalsh(Phi)[0])


@dataclass(frozen=True, eq=False)
class FrequencyScan:
    """Samples of gamma(xi, omega), sorted by (xi, omega)."""

    xi: np.ndarray
    omega: np.ndarray
    gamma: np.ndarray
    skipped: int = 0

    def __post_init__(self):
        order = np.lexsort((self.omega, self.xi))
        for name in ("xi", "omega", "gamma"):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name))[order]))
        if not (np.all(np.isfinite(self.xi)) and np.all(np.isfinite(self.omega))
                and np.all(np.isfinite(self.gamma))):
            raise NonFiniteEntry("frequency scan contains non-finite samples")

    def __len__(self):
        return self.gamma.size

    def rows(self):
        return zip(self.xi.tolist(), self.omega.tolist(), self.gamma.tolist())

    def to_csv(self, fh=None):
        """Write ``xi,omega,gamma`` rows (LF line endings). Returns the text if ``fh`` is None."""
        buf = io.StringIO() if fh is None else fh
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["xi", "omega", "gamma"])
        for row in self.rows():
            writer.writerow([repr(float(v)) for v in row])
        if fh is None:
            return buf.getvalue()
        return None


def frequency_scan(M: StateSpaceModel, xis, omegas, backend=None) -> FrequencyScan:
    """Evaluate gamma on the Cartesian grid; resolvent-singular points are dropped."""
    xis = np.asarray(xis, dtype=float).ravel()
    omegas = np.asarray(omegas, dtype=float).ravel()
    if xis.size == 0 or omegas.size == 0:
        raise ValueError("empty grid")
    g = _kernels.gamma_grid(M.A, M.B, M.C, M.D, xis, omegas, backend=backend)
    XI, OM = np.meshgrid(xis, omegas, indexing="ij")
    keep = np.isfinite(g)
    return FrequencyScan(XI[keep], OM[keep], g[keep], skipped=int((~keep).sum()))


# --------------------------------------------------------------- certificates

@dataclass(frozen=True, eq=False)
class Certificate:
    """A symmetric candidate ``X`` for ``W(X, M) >= 0`` with its classification.

    ``kind`` is one of ``"interior"``, ``"boundary"`` or ``"infeasible"``.
    """

    X: np.ndarray
    lambda_min_X: float
    lambda_min_W: float
    xi_star: float
    kind: str

    @property
    def is_feasible(self):
        return self.kind in ("interior", "boundary")


def xi_star(M: StateSpaceModel, X) -> float:
    """Largest ``xi`` with ``W(X, M) >= xi * diag(X, I)``."""
    X = _check_compatible(M, X)
    Xhat = sla.block_diag(sym(X), np.eye(M.m))
    try:
        L = np.linalg.cholesky(Xhat)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("X is not positive definite") from exc
    W = assemble_w(M, X)
    Y = sla.solve_triangular(L, W, lower=True)
    Y = sla.solve_triangular(L, Y.T, lower=True)
    return lam_min(Y)


def certify(M: StateSpaceModel, X, tol: float = DEFAULT_CERT_TOL) -> Certificate:
    """Classify ``X`` as interior, boundary or infeasible for ``W(X, M) >= 0``.

    The boundary band is ``|lambda_min(W)| <= tol * max(1, ||W||_2)``.
    """
    X = _check_compatible(M, X)
    if np.linalg.norm(X - X.T) > 1e-10 * max(1.0, np.linalg.norm(X)):
        raise InvariantViolation("certificate X is not symmetric")
    X = sym(X)
    W = assemble_w(M, X)
    lmx = lam_min(X)
    lmw = lam_min(W)
    scale = max(1.0, np.linalg.norm(W, 2))
    if lmx <= 0.0:
        return Certificate(_frozen(X), lmx, lmw, float("nan"), "infeasible")
    xs = xi_star(M, X)
    if lmw > tol * scale:
        kind = "interior"
    elif lmw >= -tol * scale:
        kind = "boundary"
    else:
        kind = "infeasible"
    return Certificate(_frozen(X), lmx, lmw, xs, kind)


# ------------------------------------------------------------ pH realisations

@dataclass(frozen=True, eq=False)
class PHRealization:
    """``x' = (J - R)x + (G - K)u, y = (G + K)^T x + (S + N)u`` with ``Q = I``.

    ``T`` is the state transformation and ``X = T^T T`` the certificate it
    came from (both ``None`` for hand-built realizations).
    """

    J: np.ndarray
    R: np.ndarray
    G: np.ndarray
    K: np.ndarray
    S: np.ndarray
    N: np.ndarray
    T: np.ndarray | None = None
    X: np.ndarray | None = None

    def __post_init__(self):
        for name in ("J", "R", "G", "K", "S", "N", "T", "X"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _frozen(np.atleast_2d(value)))

    @property
    def n(self):
        return self.J.shape[0]

    @property
    def m(self):
        return self.S.shape[0]

    @property
    def dissipation(self):
        return np.block([[self.R, self.K], [self.K.T, self.S]])

    @property
    def structure(self):
        return np.block([[self.J, self.G], [-self.G.T, self.N]])

    def to_dict(self):
        out = {"n": self.n, "m": self.m}
        for name in ("J", "R", "G", "K", "S", "N"):
            out[name] = getattr(self, name).tolist()
        return out


def check_ph(P: PHRealization, tol: float = 1e-9):
    """Raise :class:`InvariantViolation` unless the pH structure holds within ``tol``."""
    n, m = P.n, P.m
    shapes = {"J": (n, n), "R": (n, n), "G": (n, m), "K": (n, m), "S": (m, m), "N": (m, m)}
    for name, shape in shapes.items():
        if getattr(P, name).shape != shape:
            raise DimensionMismatch(f"{name} has shape {getattr(P, name).shape}, expected {shape}")
    for name in ("J", "N"):
        Z = getattr(P, name)
        if np.max(np.abs(Z + Z.T), initial=0.0) > tol * max(1.0, np.max(np.abs(Z), initial=0.0)):
            raise InvariantViolation(f"{name} is not skew-symmetric")
    W = P.dissipation
    if np.max(np.abs(W - W.T)) > tol * max(1.0, np.max(np.abs(W))):
        raise InvariantViolation("dissipation block is not symmetric")
    if lam_min(W) < -tol * max(1.0, np.linalg.norm(W, 2)):
        raise InvariantViolation("dissipation block is not positive semidefinite")


def from_ph_form(P: PHRealization, tol: float = 1e-9, rank_tol=DEFAULT_RANK_TOL) -> StateSpaceModel:
    """Back to ``{J - R, G - K, (G + K)^T, S + N}`` after checking the structure."""
    check_ph(P, tol)
    return validate_model(P.J - P.R, P.G - P.K, (P.G + P.K).T, P.S + P.N, rank_tol=rank_tol)


def transform_to_ph(M: StateSpaceModel, X, tol: float = DEFAULT_CERT_TOL) -> PHRealization:
    """pH realization induced by a feasible certificate.

    ``X = T^T T`` with ``T`` the upper Cholesky factor; the transformed model
    ``{T A T^-1, T B, C T^-1, D}`` is then split into its pH blocks.
    """
    cert = X if isinstance(X, Certificate) else None
    Xm = cert.X if cert is not None else _check_compatible(M, X)
    try:
        L = np.linalg.cholesky(sym(Xm))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("certificate X is not positive definite") from exc
    if cert is None:
        cert = certify(M, Xm, tol)
    if cert.kind == "infeasible":
        raise InfeasibleCertificate(
            f"lambda_min(W) = {cert.lambda_min_W:.3e}; X is not a passivity certificate"
        )
    T = L.T
    A, B, C, D = M.matrices()
    # T A T^-1 and C T^-1 through triangular solves.
    AT = sla.solve_triangular(T, (T @ A).T, trans="T").T
    BT = T @ B
    CT = sla.solve_triangular(T, C.T, trans="T").T
    R = -sym(AT)
    J = 0.5 * (AT - AT.T)
    K = 0.5 * (CT.T - BT)
    G = 0.5 * (CT.T + BT)
    S = sym(D)
    N = 0.5 * (D - D.T)
    return PHRealization(J, R, G, K, S, N, T=T, X=sym(Xm))


def transformed_model(M: StateSpaceModel, T) -> StateSpaceModel:
    """``{T A T^-1, T B, C T^-1, D}``."""
    T = np.asarray(T, dtype=float)
    AT = np.linalg.solve(T.T, (T @ M.A).T).T
    CT = np.linalg.solve(T.T, M.C.T).T
    return StateSpaceModel(AT, T @ M.B, CT, M.D, minimal=M.minimal)


# --------------------------------------------------- Hamiltonian and pencil

def _d_block(M, xi):
    Z = M.D.T + M.D - xi * np.eye(M.m)
    if np.linalg.cond(Z) > 1e12:
        raise SingularDBlock(f"D^T + D - {xi} I is numerically singular")
    return Z


def assemble_hamiltonian(M: StateSpaceModel, xi: float = 0.0) -> np.ndarray:
    """Hamiltonian whose imaginary-axis eigenvalues are the zeros of the shifted Popov function."""
    A, B, C, _ = M.matrices()
    Z = _d_block(M, xi)
    As = A + 0.5 * xi * np.eye(M.n)
    left = np.vstack([-B, C.T])
    right = np.linalg.solve(Z, np.hstack([C, B.T]))
    return sla.block_diag(As, -As.T) + left @ right


class PencilSpectrum(NamedTuple):
    finite: np.ndarray
    n_infinite: int
    regular: bool


@dataclass(frozen=True, eq=False)
class Pencil:
    """System pencil ``P - s E`` of the shifted model (order 2n + m)."""

    P: np.ndarray
    E: np.ndarray

    def __iter__(self):
        return iter((self.P, self.E))

    @property
    def scale(self):
        return max(1.0, np.linalg.norm(self.P))

    @cached_property
    def spectrum(self) -> PencilSpectrum:
        """Finite generalized eigenvalues; ``regular`` is False for a singular pencil."""
        return pencil_spectrum(self.P, self.E)


def pencil_spectrum(P, E) -> PencilSpectrum:
    ab = sla.eigvals(P, E, homogeneous_eigvals=True)
    alpha, beta = ab[0], ab[1]
    size = np.linalg.norm(P) + np.linalg.norm(E)
    tiny = 1e3 * _EPS * size
    singular = (np.abs(alpha) <= tiny) & (np.abs(beta) <= tiny)
    finite = ~singular & (np.abs(beta) > 1e-10 * np.abs(alpha))
    eigs = alpha[finite] / beta[finite]
    return PencilSpectrum(np.sort_complex(eigs), int(np.sum(~finite & ~singular)), not singular.any())


def assemble_pencil(M: StateSpaceModel, xi: float = 0.0) -> Pencil:
    """``S_xi(s) = P - s E``.

    ``P = [[0, A + xi/2 I, B], [A^T + xi/2 I, 0, C^T], [B^T, C, D^T + D - xi I]]`` and
    ``E`` carries ``+I`` in block (1, 2) and ``-I`` in block (2, 1).
    """
    A, B, C, D = M.matrices()
    n, m = M.n, M.m
    I, Z = np.eye(n), np.zeros((n, n))
    As = A + 0.5 * xi * I
    P = np.block([
        [Z, As, B],
        [As.T, Z, C.T],
        [B.T, C, D.T + D - xi * np.eye(m)],
    ])
    E = np.zeros_like(P)
    E[:n, n:2 * n] = I
    E[n:2 * n, :n] = -I
    return Pencil(P, E)
