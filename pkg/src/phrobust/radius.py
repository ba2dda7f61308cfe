"""X-passivity radius, its bounds and the worst-case rank-one perturbation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq

from .exceptions import ConvergenceFailure, DimensionMismatch, InvariantViolation, NotInterior
from .model import (
    Certificate,
    PHRealization,
    StateSpaceModel,
    assemble_w,
    certify,
    check_ph,
    lam_min,
    sym,
    validate_model,
    xi_star,
)

__all__ = [
    "StructuredPerturbation",
    "RadiusReport",
    "xi_star",
    "x_passivity_radius",
    "ph_radius",
    "apply_perturbation",
    "lambda_max_profile",
    "golden_section",
]

INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0
LOG_GAMMA_RANGE = (-8.0, 8.0)
_CLUSTER_RTOL = 1e-8


def golden_section(f, lo, hi, tol=1e-10, max_iter=200):
    """Minimise a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x), iterations)``."""
    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol:
        if it >= max_iter:
            raise ConvergenceFailure(f"golden-section search did not reach tol={tol} in {max_iter} steps")
        it += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = c if fc <= fd else d
    return x, min(fc, fd), it


@dataclass(frozen=True, eq=False)
class StructuredPerturbation:
    """Model perturbation ``{dA, dB, dC, dD}``.

    Its stacked form is ``[[-dA, -dB], [dC, dD]]``, which has the same 2-norm
    and Frobenius norm as ``[[dA, dB], [dC, dD]]``.
    """

    dA: np.ndarray
    dB: np.ndarray
    dC: np.ndarray
    dD: np.ndarray

    @classmethod
    def from_delta_s(cls, delta_s, n):
        Ds = np.asarray(delta_s, dtype=float)
        return cls(-Ds[:n, :n], -Ds[:n, n:], Ds[n:, :n], Ds[n:, n:])

    @classmethod
    def zero(cls, n, m):
        return cls(np.zeros((n, n)), np.zeros((n, m)), np.zeros((m, n)), np.zeros((m, m)))

    @property
    def as_delta_s(self):
        return np.block([[-self.dA, -self.dB], [self.dC, self.dD]])

    @property
    def as_block(self):
        return np.block([[self.dA, self.dB], [self.dC, self.dD]])

    @property
    def norm_2(self):
        return float(np.linalg.norm(self.as_delta_s, 2))

    @property
    def norm_F(self):
        return float(np.linalg.norm(self.as_delta_s))


@dataclass(frozen=True, eq=False)
class RadiusReport:
    rho: float
    gamma_star: float
    lambda_max: float
    u: np.ndarray
    v: np.ndarray
    perturbation: StructuredPerturbation
    lower_bound: float
    upper_bound: float
    alpha: float
    beta: float
    residual_lambda_min: float
    certificate: Certificate


def apply_perturbation(M: StateSpaceModel, P: StructuredPerturbation) -> StateSpaceModel:
    """``{A + dA, B + dB, C + dC, D + dD}``."""
    for name, base, d in zip(("dA", "dB", "dC", "dD"), M.matrices(), (P.dA, P.dB, P.dC, P.dD)):
        if np.shape(d) != base.shape:
            raise DimensionMismatch(f"{name} has shape {np.shape(d)}, expected {base.shape}")
    return validate_model(M.A + P.dA, M.B + P.dB, M.C + P.dC, M.D + P.dD)


def _inv_sqrt(W):
    w, V = np.linalg.eigh(sym(W))
    return (V / np.sqrt(w)) @ V.T


def _top_cluster(vals, vecs, largest=True):
    if largest:
        ref = vals[-1]
        mask = vals >= ref - _CLUSTER_RTOL * max(abs(ref), 1e-300)
    else:
        ref = vals[0]
        mask = vals <= ref + _CLUSTER_RTOL * max(abs(ref), 1e-300)
    return vecs[:, mask]


def _sign_normalize(y):
    k = int(np.argmax(np.abs(y)))
    return y if y[k] >= 0 else -y


def _canonical_vector(Y):
    """Unit vector of span(Y) with the largest first component (then second, ...)."""
    for k in range(Y.shape[0]):
        y = Y @ Y[k]
        nrm = np.linalg.norm(y)
        if nrm > 1e-8:
            y = y / nrm
            return y if y[k] > 0 else -y
    return Y[:, 0]


class _GammaProblem:
    """``lambda_max(gamma^2 P P^T + W^{-1}/gamma^2)`` with ``P = W^{-1/2} Xhat``."""

    def __init__(self, W, Xhat):
        self.Q = _inv_sqrt(W)
        self.P = self.Q @ Xhat
        self.PPt = sym(self.P @ self.P.T)
        self.Winv = sym(self.Q @ self.Q)

    def matrix(self, gamma):
        g2 = gamma * gamma
        return g2 * self.PPt + self.Winv / g2

    def lam_max(self, gamma):
        return float(np.linalg.eigvalsh(self.matrix(gamma))[-1])

    def slope_form(self, gamma):
        g2 = gamma * gamma
        return g2 * self.PPt - self.Winv / g2

    def top_vector(self, gamma):
        vals, vecs = np.linalg.eigh(self.matrix(gamma))
        Y = _top_cluster(vals, vecs)
        if Y.shape[1] == 1:
            return vals[-1], _sign_normalize(Y[:, 0])
        # Degenerate top eigenspace: pick y in it with y^T Dslope y = 0 so that |u| = |v|.
        S = sym(Y.T @ self.slope_form(gamma) @ Y)
        s, V = np.linalg.eigh(S)
        if np.abs(s).max() <= 1e-12 * vals[-1]:
            return vals[-1], _canonical_vector(Y)
        if s[0] >= 0.0:
            return vals[-1], _sign_normalize(Y @ V[:, 0])
        if s[-1] <= 0.0:
            return vals[-1], _sign_normalize(Y @ V[:, -1])
        theta = np.arctan(np.sqrt(s[-1] / -s[0]))
        y = np.cos(theta) * (Y @ V[:, -1]) + np.sin(theta) * (Y @ V[:, 0])
        return vals[-1], _sign_normalize(y / np.linalg.norm(y))

    def slope(self, gamma):
        """Sign-carrying derivative proxy ``|u|^2 - |v|^2`` at the top eigenvector."""
        _, y = self.top_vector(gamma)
        return float(y @ self.slope_form(gamma) @ y)


def lambda_max_profile(M: StateSpaceModel, X, gammas) -> np.ndarray:
    """``lambda_max(M(gamma))`` for each gamma."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    W = assemble_w(M, X)
    prob = _GammaProblem(W, sla.block_diag(X, np.eye(M.m)))
    return np.array([prob.lam_max(g) for g in np.asarray(gammas, dtype=float)])


def _minimise_gamma(prob, tol, max_iter):
    t, _, _ = golden_section(lambda t: prob.lam_max(10.0 ** t), *LOG_GAMMA_RANGE, tol=tol, max_iter=max_iter)
    # Polish on the stationarity condition |u| = |v| where the top eigenvalue is simple.
    h = lambda t: prob.slope(10.0 ** t)  # noqa: E731
    for width in (1e-6, 1e-4, 1e-2):
        a, b = t - width, t + width
        ha, hb = h(a), h(b)
        if ha < 0.0 < hb:
            t2 = brentq(h, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            if prob.lam_max(10.0 ** t2) <= prob.lam_max(10.0 ** t) * (1 + 1e-14):
                t = t2
            break
    return 10.0 ** t


def x_passivity_radius(
    M: StateSpaceModel,
    X,
    tol: float = 1e-10,
    max_iter: int = 200,
    cert_tol: float = 1e-9,
) -> RadiusReport:
    """Exact X-passivity radius and the rank-one perturbation that attains it.

    Parameters
    ----------
    M : StateSpaceModel
    X : array_like or Certificate
        Must be interior: ``X > 0`` and ``W(X, M) > 0``.
    tol : float
        Golden-section tolerance on ``log10(gamma)`` over ``[-8, 8]``.
    max_iter : int
        Golden-section iteration cap.

    Returns
    -------
    RadiusReport
        ``rho = 1/lambda_max``; ``perturbation`` has norm ``rho`` in both the
        2-norm and the Frobenius norm and makes ``W(X, M + Delta)`` singular.
    """
    cert = X if isinstance(X, Certificate) else certify(M, X, cert_tol)
    if cert.kind != "interior":
        raise NotInterior(f"certificate is {cert.kind} (lambda_min(W) = {cert.lambda_min_W:.3e})")
    Xm = cert.X
    n, m = M.n, M.m
    W = assemble_w(M, Xm)
    Xhat = sla.block_diag(Xm, np.eye(m))
    prob = _GammaProblem(W, Xhat)
    gamma = _minimise_gamma(prob, tol, max_iter)
    lam, y = prob.top_vector(gamma)
    u = gamma * (prob.P.T @ y)
    v = (prob.Q @ y) / gamma
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)

    scale = max(1.0, np.linalg.norm(W, 2))
    candidates = []
    for sign in (-1.0, 1.0):
        Ds = sign * np.outer(u, v) / lam
        E = Xhat @ Ds
        candidates.append((abs(lam_min(W + E + E.T)), lam_min(W + E + E.T), Ds))
    candidates.sort(key=lambda c: c[0])
    if candidates[0][0] > 1e-6 * scale:
        raise InvariantViolation(
            f"rank-one perturbation leaves lambda_min(W) = {candidates[0][1]:.3e}"
        )
    _, resid, Ds = candidates[0]

    alpha = np.sqrt(lam_min(W))
    Xi = np.linalg.inv(Xhat)
    beta = np.sqrt(lam_min(Xi @ W @ Xi))
    wv, wV = np.linalg.eigh(W)
    Vb = _top_cluster(wv, wV, largest=False)
    Ul, sv, _ = np.linalg.svd(prob.P)
    Wb = Ul[:, sv >= sv[0] * (1 - _CLUSTER_RTOL)]
    overlap = float(np.linalg.svd(Vb.T @ Wb, compute_uv=False)[0])
    overlap = min(overlap, 1.0)

    return RadiusReport(
        rho=1.0 / lam,
        gamma_star=gamma,
        lambda_max=lam,
        u=u,
        v=v,
        perturbation=StructuredPerturbation.from_delta_s(Ds, n),
        lower_bound=alpha * beta / 2.0,
        upper_bound=alpha * beta / (1.0 + overlap),
        alpha=alpha,
        beta=beta,
        residual_lambda_min=resid,
        certificate=cert,
    )


def ph_radius(P: PHRealization, tol: float = 1e-9) -> float:
    """I-passivity radius of a pH realization: ``lambda_min([[R, K], [K^T, S]])``."""
    check_ph(P, tol)
    return lam_min(P.dissipation)
