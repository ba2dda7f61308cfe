"""Brute-force references: grid estimate of the margin, random perturbation
search, closed forms for scalar models and a random passive-model generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

from . import _kernels
from .model import (
    Certificate,
    PHRealization,
    StateSpaceModel,
    assemble_w,
    eval_gamma,
    lam_min,
    shift_model,
    spectral_abscissa,
    validate_model,
)
from .exceptions import PassivityError, ResolventSingular
from .optimal import passivity_status, xi_bisection
from .riccati import ANTISTABILIZING, STABILIZING, solve_are


@dataclass(frozen=True)
class GridSpec:
    xi_points: int = 2001
    omega_points: int = 2001
    omega_max: float = 100.0
    log_spacing: bool = False

    def __post_init__(self):
        if self.xi_points < 2 or self.omega_points < 2:
            raise ValueError("grid counts must be at least 2")
        if not self.omega_max > 0:
            raise ValueError("omega_max must be positive")

    def omegas(self):
        if self.log_spacing:
            w = np.logspace(np.log10(self.omega_max) - 6.0, np.log10(self.omega_max), self.omega_points - 1)
            return np.concatenate([[0.0], w])
        return np.linspace(0.0, self.omega_max, self.omega_points)


def _row_fails(M, xi, omegas, row, refine):
    if 2.0 * spectral_abscissa(M.A) + xi >= 0.0:
        return True
    if lam_min(M.D.T + M.D) - xi <= 0.0:
        return True
    if np.isnan(row).any() or row.min() <= 0.0:
        return True
    if not refine:
        return False
    # The grid may straddle a narrow dip: polish around the sampled minimum.
    k = int(np.argmin(row))
    lo, hi = omegas[max(k - 1, 0)], omegas[min(k + 1, len(omegas) - 1)]

    def g(w):
        try:
            return eval_gamma(M, xi, w)[1]
        except ResolventSingular:
            return -np.inf

    res = minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * max(1.0, hi)})
    return min(res.fun, g(omegas[k])) <= 0.0


def grid_xi_oracle(M: StateSpaceModel, g: GridSpec = GridSpec(), refine: bool = True, backend=None) -> float:
    """Smallest grid ``xi`` in ``[0, lambda_min(D^T + D)]`` where the shifted model fails.

    Failure means ``min_omega gamma(xi, omega) <= 0`` on the grid (or after a
    local polish of the sampled minimum), ``gamma(xi, inf) <= 0``, or
    ``A + xi/2 I`` not Hurwitz. The result overestimates the margin by at
    most one grid step, up to grid resolution in ``omega``.
    """
    if not passivity_status(M, 0.0).strictly_passive:
        return 0.0
    xis = np.linspace(0.0, lam_min(M.D.T + M.D), g.xi_points)
    omegas = g.omegas()
    A, B, C, D = M.matrices()
    gam = _kernels.gamma_grid(A, B, C, D, xis, omegas, backend)
    first = len(xis) - 1
    for i in range(len(xis)):
        if _row_fails(M, xis[i], omegas, gam[i], refine=False):
            first = i
            break
    if refine:
        # Failure is monotone in xi, so only rows just below the first hit need polishing.
        while first > 0 and _row_fails(M, xis[first - 1], omegas, gam[first - 1], refine=True):
            first -= 1
    return float(xis[first])


def random_perturbation_search(
    M: StateSpaceModel,
    X,
    restarts: int = 500,
    seed: int = 0,
    extra_directions=(),
    t_max: float = 1e8,
    backend=None,
) -> float:
    """Upper bound on the X-passivity radius by random line search.

    Each direction ``D`` (unit Frobenius norm, in ``[[-dA, -dB], [dC, dD]]``
    form) is tried with both signs; the smallest ``t`` making
    ``W(X, M + tD)`` singular is found by bisection. ``extra_directions`` are
    normalised and tried first. The generator is ``numpy.random.default_rng(seed)``.
    """
    Xm = X.X if isinstance(X, Certificate) else np.atleast_2d(np.asarray(X, dtype=float))
    N = M.n + M.m
    W = assemble_w(M, Xm)
    Xhat = sla.block_diag(Xm, np.eye(M.m))
    dirs = [np.asarray(d, dtype=float) / np.linalg.norm(d) for d in extra_directions]
    rng = np.random.default_rng(seed)
    if restarts > 0:
        R = rng.standard_normal((restarts, N, N))
        R /= np.linalg.norm(R, axis=(1, 2))[:, None, None]
        dirs.extend(R)
    if not dirs:
        raise ValueError("no directions to search")
    D = np.stack(dirs)
    D = np.concatenate([D, -D])
    return float(_kernels.singular_steps(W, Xhat, D, t_max, backend).min())


# --------------------------------------------------------- scalar closed forms

def scalar_gamma(a, b, c, d, xi, omega):
    """``gamma`` for a scalar model: ``2 Re(cb/(i omega - xi/2 - a) + d - xi/2)``."""
    return 2.0 * (c * b / (1j * omega - 0.5 * xi - a) + d - 0.5 * xi).real


def scalar_are(a, b, c, d):
    """Both roots of ``b^2 x^2 + (4ad - 2bc) x + c^2 = 0``, ascending."""
    p = 4.0 * a * d - 2.0 * b * c
    disc = p * p - 4.0 * b * b * c * c
    r = np.sqrt(disc)
    return tuple(sorted(((-p - r) / (2 * b * b), (-p + r) / (2 * b * b))))


def scalar_xi_star(a, b, c, d, x):
    """``d - a - sqrt((a + d)^2 + (c - x b)^2 / x)``."""
    return (d - a) - np.sqrt((a + d) ** 2 + (c - x * b) ** 2 / x)


# ----------------------------------------------------------- random corpus

class CorpusModel(NamedTuple):
    model: StateSpaceModel
    X0: np.ndarray
    ph: PHRealization


def random_passive_model(rng, n: int, m: int, margin: float = 0.05, cond_shift: float = 3.0) -> CorpusModel:
    """Strictly passive model from random pH data in a random state basis.

    ``[[R, K], [K^T, S]]`` is a random Gram matrix plus ``margin * I``; the
    pH model is then mapped through ``T0 = randn + cond_shift * I``, so
    ``X0 = T0^T T0`` is an interior certificate.
    """
    J = rng.standard_normal((n, n))
    J = J - J.T
    L = rng.standard_normal((n + m, n + m))
    Dss = L @ L.T / (n + m) + margin * np.eye(n + m)
    R, K, S = Dss[:n, :n], Dss[:n, n:], Dss[n:, n:]
    G = rng.standard_normal((n, m))
    N = rng.standard_normal((m, m))
    N = N - N.T
    T0 = rng.standard_normal((n, n)) + cond_shift * np.eye(n)
    Ti = np.linalg.inv(T0)
    M = validate_model(Ti @ (J - R) @ T0, Ti @ (G - K), (G + K).T @ T0, S + N)
    ph = PHRealization(J, R, G, K, S, N)
    return CorpusModel(M, T0.T @ T0, ph)


def passive_corpus(count: int = 100, seed: int = 2024, max_n: int = 6, max_m: int = 3):
    """``count`` minimal strictly passive models with ``n <= max_n``, ``m <= max_m``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(1, max_n + 1))
        m = int(rng.integers(1, max_m + 1))
        item = random_passive_model(rng, n, m)
        if item.model.minimal and passivity_status(item.model, 0.0).strictly_passive:
            out.append(item)
    return out


def interior_certificates(M: StateSpaceModel, count: int, rng, X0=None, xi_max=None):
    """Interior certificates from Riccati solutions of shifted models.

    For ``0 < xi < Xi`` both extremal solutions of ``M_xi`` satisfy
    ``W(X, M) >= xi diag(X, I) > 0``. Convex combinations of interior
    certificates are interior as well and are mixed in.
    """
    if xi_max is None:
        xi_max = xi_bisection(M, 1e-6).xi_lo
    pool = [] if X0 is None else [np.asarray(X0, dtype=float)]
    attempts = 0
    while len(pool) < count and attempts < 20 * count:
        attempts += 1
        if pool and rng.random() < 0.3 and len(pool) >= 2:
            i, j = rng.choice(len(pool), 2, replace=False)
            t = rng.random()
            pool.append(t * pool[i] + (1.0 - t) * pool[j])
            continue
        xi = xi_max * rng.uniform(0.05, 0.95)
        mode = STABILIZING if rng.random() < 0.5 else ANTISTABILIZING
        try:
            pool.append(solve_are(shift_model(M, xi), mode).X)
        except PassivityError:
            continue
    return pool[:count]
