"""Optimal robustness margin and the optimally robust pH realization.

The margin is the largest shift ``xi`` for which
``{A + xi/2 I, B, C, D - xi/2 I}`` stays strictly passive. Two solvers are
provided: plain bisection on the strict-passivity test and a frequency
midpoint iteration that updates the upper bound from the real roots of the
system pencil at a single frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .exceptions import (
    InvariantViolation,
    NotMinimal,
    NotStrictlyPassive,
    ResolventSingular,
    StallDetected,
)
from .model import (
    PHRealization,
    StateSpaceModel,
    assemble_pencil,
    eval_gamma,
    lam_min,
    shift_model,
    spectral_abscissa,
    transform_to_ph,
    xi_star,
)
from .riccati import STABILIZING, solve_are

DEFAULT_AXIS_TOL = 1e-8
DEFAULT_TAU = 1e-6


@dataclass(frozen=True)
class PassivityStatus:
    """Strict-passivity conditions of the model shifted by ``xi``.

    ``a1``: ``A + xi/2 I`` is Hurwitz. ``a2``: ``D^T + D - xi I > 0``.
    ``a3``: the shifted pencil has no imaginary-axis eigenvalues;
    ``crossings`` lists the nonnegative frequencies where it does.
    ``degenerate`` marks a numerically singular pencil (then ``a3`` is False).
    """

    xi: float
    a1: bool
    a2: bool
    a3: bool
    spectral_abscissa: float
    d_margin: float
    crossings: tuple
    degenerate: bool = False

    @property
    def strictly_passive(self):
        return self.a1 and self.a2 and self.a3


def _dedupe(values, rtol=1e-9):
    out = []
    for w in sorted(values):
        if out and abs(w - out[-1]) <= rtol * (1.0 + abs(w)):
            continue
        out.append(w)
    return out


def passivity_status(M: StateSpaceModel, xi: float = 0.0, axis_tol: float = DEFAULT_AXIS_TOL) -> PassivityStatus:
    """Evaluate conditions A1-A3 at shift ``xi`` (``xi = 0`` is the plain strict-passivity test)."""
    xi = float(xi)
    absc = spectral_abscissa(M.A) + 0.5 * xi
    dmargin = lam_min(M.D.T + M.D - xi * np.eye(M.m))
    pencil = assemble_pencil(M, xi)
    spec = pencil.spectrum
    if not spec.regular:
        return PassivityStatus(xi, absc < 0.0, dmargin > 0.0, False, absc, dmargin, (), degenerate=True)
    band = axis_tol * pencil.scale
    on_axis = spec.finite[np.abs(spec.finite.real) <= band]
    omegas = [0.0 if abs(w) <= band else abs(w) for w in on_axis.imag]
    crossings = tuple(_dedupe(omegas))
    return PassivityStatus(xi, absc < 0.0, dmargin > 0.0, not crossings, absc, dmargin, crossings)


def classify_passivity(M: StateSpaceModel, delta: float = 1e-6, axis_tol: float = DEFAULT_AXIS_TOL) -> str:
    """``"strict"``, ``"passive"`` or ``"non-passive"``.

    A model that is not strictly passive counts as passive when the
    perturbed model ``{A - delta/2 I, B, C, D + delta/2 I}`` is strictly
    passive: a certificate with ``W(X) >= 0`` gives ``W(X) + delta diag(X, I) > 0``.
    """
    if passivity_status(M, 0.0, axis_tol).strictly_passive:
        return "strict"
    if passivity_status(M, -abs(delta), axis_tol).strictly_passive:
        return "passive"
    return "non-passive"


def xi_upper_bound(M: StateSpaceModel, axis_tol: float = DEFAULT_AXIS_TOL) -> float:
    """``min(-2 max Re lambda(A), lambda_min(D^T + D))``, or 0 if ``M`` is not strictly passive."""
    if not passivity_status(M, 0.0, axis_tol).strictly_passive:
        return 0.0
    return min(-2.0 * spectral_abscissa(M.A), lam_min(M.D.T + M.D))


class TraceEntry(NamedTuple):
    xi: float
    decision: str
    xi_lo: float
    xi_hi: float


@dataclass(frozen=True)
class XiResult:
    xi_lo: float
    xi_hi: float
    iterations: int
    evaluations: int
    method: str
    xi_up_initial: float
    trace: tuple = field(default=(), repr=False)
    fallback: bool = False

    @property
    def width(self):
        return self.xi_hi - self.xi_lo

    @property
    def xi(self):
        return 0.5 * (self.xi_lo + self.xi_hi)


def _bisect(M, lo, hi, tau, axis_tol, trace):
    it = 0
    while hi - lo > tau:
        it += 1
        mid = 0.5 * (lo + hi)
        if passivity_status(M, mid, axis_tol).strictly_passive:
            lo = mid
            trace.append(TraceEntry(mid, "strictly passive", lo, hi))
        else:
            hi = mid
            trace.append(TraceEntry(mid, "not strictly passive", lo, hi))
    return lo, hi, it


def xi_bisection(M: StateSpaceModel, tau: float = DEFAULT_TAU, axis_tol: float = DEFAULT_AXIS_TOL) -> XiResult:
    """Bisection on ``[0, xi_upper_bound(M)]``; at most ``ceil(log2(up/tau))`` steps."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    up = xi_upper_bound(M, axis_tol)
    if up <= 0.0:
        return XiResult(0.0, 0.0, 0, 1, "bisection", up)
    trace = []
    lo, hi, it = _bisect(M, 0.0, up, tau, axis_tol, trace)
    return XiResult(lo, hi, it, it + 1, "bisection", up, tuple(trace))


def max_bisection_steps(xi_up: float, tau: float) -> int:
    return max(0, math.ceil(math.log2(xi_up / tau))) if xi_up > 0 else 0


def negative_intervals(M: StateSpaceModel, xi: float, axis_tol: float = DEFAULT_AXIS_TOL, status=None):
    """Maximal frequency intervals on which ``gamma(xi, omega) < 0``.

    Candidate endpoints are the imaginary-axis eigenvalues of the shifted
    pencil; each segment between consecutive candidates is classified by the
    sign of gamma at its midpoint. Intervals are reported on ``omega >= 0``
    except one containing 0, which is returned symmetrically as ``(-w, w)``.
    The last interval may extend to ``inf``.
    """
    st = status if status is not None else passivity_status(M, xi, axis_tol)
    if st.degenerate:
        return []
    cuts = [w for w in st.crossings if w > 0.0]
    bounds = [0.0] + cuts + [math.inf]
    negative = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        if math.isinf(b):
            probe = 2.0 * a + 1.0
        else:
            probe = 0.5 * (a + b)
        try:
            g = eval_gamma(M, xi, probe)[1]
        except ResolventSingular:
            g = st.d_margin if math.isinf(b) else 0.0
        negative.append(g < 0.0)
    intervals = []
    for (a, b), neg in zip(zip(bounds[:-1], bounds[1:]), negative):
        if not neg:
            continue
        if intervals and intervals[-1][1] == a:
            intervals[-1][1] = b
        else:
            intervals.append([a, b])
    out = []
    for a, b in intervals:
        out.append((-b, b) if a == 0.0 else (a, b))
    return out


def _sxi_parts(M, omega):
    A, B, C, D = M.matrices()
    n, m = M.n, M.m
    I = np.eye(n)
    Z = np.zeros((n, n))
    S0 = np.block([
        [Z, A - 1j * omega * I, B],
        [A.T + 1j * omega * I, Z, C.T],
        [B.T, C, D.T + D],
    ]).astype(complex)
    G = np.zeros((2 * n + m, 2 * n + m))
    G[:n, n:2 * n] = 0.5 * I
    G[n:2 * n, :n] = 0.5 * I
    G[2 * n:, 2 * n:] = -np.eye(m)
    return S0, G


def real_shift_roots(M: StateSpaceModel, omega_hat: float, imag_tol: float = 1e-8):
    """Real ``xi`` at which ``S_xi(i*omega_hat)`` is singular, ascending.

    ``S_xi(i w) = S_0(i w) + xi G`` is affine in ``xi`` with ``G`` invertible,
    so the roots are the eigenvalues of the pencil ``(S_0(i w), -G)``.
    """
    S0, G = _sxi_parts(M, float(omega_hat))
    roots = sla.eigvals(S0, -G)
    roots = roots[np.isfinite(roots)]
    real = roots[np.abs(roots.imag) <= imag_tol * np.maximum(1.0, np.abs(roots))].real
    return sorted(_dedupe(real.tolist(), rtol=1e-12))


def sxi_at(M: StateSpaceModel, xi: float, omega: float) -> np.ndarray:
    S0, G = _sxi_parts(M, omega)
    return S0 + xi * G


def xi_accelerated(
    M: StateSpaceModel,
    tau: float = DEFAULT_TAU,
    axis_tol: float = DEFAULT_AXIS_TOL,
    max_iter: int = 100,
) -> XiResult:
    """Frequency-midpoint iteration for the optimal margin.

    Starting from ``xi_hat = up - tau``: if the shifted model is strictly
    passive the bracket ``[xi_hat, up]`` is returned. Otherwise the largest
    interval of negative gamma gives a midpoint frequency, and the smallest
    positive real root of the pencil there (at most the current ``up``)
    becomes the new upper bound. When no progress is possible the method
    falls back to bisection on ``[0, up]`` and sets ``fallback``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    up0 = xi_upper_bound(M, axis_tol)
    if up0 <= 0.0:
        return XiResult(0.0, 0.0, 0, 1, "accelerated", up0)
    up = up0
    trace = []
    evaluations = 1
    for it in range(1, max_iter + 1):
        xi_hat = up - tau
        if xi_hat <= 0.0:
            trace.append(TraceEntry(0.0, "bracket below tau", 0.0, up))
            return XiResult(0.0, up, it, evaluations, "accelerated", up0, tuple(trace))
        st = passivity_status(M, xi_hat, axis_tol)
        evaluations += 1
        ints = negative_intervals(M, xi_hat, axis_tol, status=st)
        if st.a1 and st.a2 and not ints and not st.degenerate:
            trace.append(TraceEntry(xi_hat, "strictly passive", xi_hat, up))
            return XiResult(xi_hat, up, it, evaluations, "accelerated", up0, tuple(trace))
        try:
            finite = [iv for iv in ints if math.isfinite(iv[1])]
            if not finite:
                raise StallDetected("no finite negative interval to refine")
            a, b = max(finite, key=lambda iv: (iv[1] - iv[0], -iv[0]))
            w_hat = 0.5 * (a + b)
            cand = [r for r in real_shift_roots(M, w_hat) if 0.0 < r <= up]
            if not cand or min(cand) >= up - 0.5 * tau:
                raise StallDetected("pencil roots did not lower the upper bound")
        except StallDetected as exc:
            trace.append(TraceEntry(xi_hat, f"stall: {exc}", 0.0, up))
            lo, hi, k = _bisect(M, 0.0, up, tau, axis_tol, trace)
            return XiResult(lo, hi, it + k, evaluations + k, "accelerated", up0, tuple(trace), fallback=True)
        up = min(cand)
        trace.append(TraceEntry(xi_hat, f"negative on [{a:.6g}, {b:.6g}], omega_hat={w_hat:.6g}", 0.0, up))
    raise StallDetected(f"no convergence in {max_iter} iterations")


class OptimalPH(NamedTuple):
    realization: PHRealization
    xi: XiResult
    X: np.ndarray
    xi_star: float


def optimal_ph(
    M: StateSpaceModel,
    tau: float = DEFAULT_TAU,
    axis_tol: float = DEFAULT_AXIS_TOL,
    method: str = "accelerated",
) -> OptimalPH:
    """pH realization whose passivity radius is (within ``tau``) the largest possible.

    The certificate is the stabilizing Riccati solution of the model shifted
    by ``xi_lo``, just below the optimal margin where the strict LMI is still
    feasible.
    """
    if M.minimal is False:
        raise NotMinimal("optimal pH realization requires a minimal model")
    if not passivity_status(M, 0.0, axis_tol).strictly_passive:
        raise NotStrictlyPassive("model is not strictly passive")
    if method == "accelerated":
        res = xi_accelerated(M, tau, axis_tol)
    elif method == "bisection":
        res = xi_bisection(M, tau, axis_tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    are = solve_are(shift_model(M, res.xi_lo), STABILIZING, axis_tol=axis_tol)
    X = are.X
    ph = transform_to_ph(M, X)
    xs = xi_star(M, X)
    if xs < res.xi_lo - 2.0 * tau:
        raise InvariantViolation(f"xi*(X) = {xs:.6g} below xi_lo - 2 tau = {res.xi_lo - 2 * tau:.6g}")
    return OptimalPH(ph, res, X, xs)
