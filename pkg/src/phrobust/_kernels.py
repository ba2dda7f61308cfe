"""Hot numeric loops.

Every kernel exists twice: a numba ``@njit`` version and a vectorised numpy
version with identical semantics. Public wrappers dispatch on the backend
chosen in :mod:`phrobust._backend`.
"""

import numpy as np

from . import _backend

# Fixed so both backends perform the same number of bisection steps.
BISECTION_STEPS = 64
GROWTH_STEPS = 80


# ----------------------------------------------------------------- numpy path

def _gamma_grid_numpy(A, B, C, D, eigA, xis, omegas, sing_tol):
    n, m = B.shape
    out = np.empty((xis.size, omegas.size))
    eye_n = np.eye(n)
    eye_m = np.eye(m)
    Bc = B.astype(complex)
    for i, xi in enumerate(xis):
        s = 1j * omegas - 0.5 * xi
        dist = np.abs(s[:, None] - eigA[None, :]).min(axis=1) if n else np.full(s.size, np.inf)
        ok = dist > sing_tol
        row = np.full(omegas.size, np.nan)
        if ok.any():
            M = s[ok, None, None] * eye_n - A
            Y = np.linalg.solve(M, np.broadcast_to(Bc, (M.shape[0], n, m)))
            T = C @ Y + (D - 0.5 * xi * eye_m)
            Phi = T + np.conj(np.swapaxes(T, -1, -2))
            row[ok] = np.linalg.eigvalsh(Phi)[:, 0]
        out[i] = row
    return out


def _sigma_min_grid_numpy(A, omegas):
    n = A.shape[0]
    M = A[None, :, :] - 1j * omegas[:, None, None] * np.eye(n)
    return np.linalg.svd(M, compute_uv=False)[:, -1]


def _is_pd_batch(Ms):
    return np.linalg.eigvalsh(Ms)[:, 0] > 0.0


def _singular_steps_numpy(W, Xhat, deltas, t_max):
    E = Xhat @ deltas
    E = E + np.swapaxes(E, -1, -2)
    k = deltas.shape[0]
    lo = np.zeros(k)
    hi = np.ones(k)
    found = np.zeros(k, dtype=bool)
    for _ in range(GROWTH_STEPS):
        active = ~found & (hi <= t_max)
        if not active.any():
            break
        pd = _is_pd_batch(W + hi[active, None, None] * E[active])
        idx = np.flatnonzero(active)
        found[idx[~pd]] = True
        grow = idx[pd]
        lo[grow] = hi[grow]
        hi[grow] *= 2.0
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        pd = _is_pd_batch(W + mid[:, None, None] * E)
        lo = np.where(pd, mid, lo)
        hi = np.where(pd, hi, mid)
    return np.where(found, hi, np.inf)


# ----------------------------------------------------------------- numba path

if _backend.HAVE_NUMBA:
    from numba import njit, prange

    @njit(cache=True)
    def _csolve_inplace(M, Y):
        # Gaussian elimination with partial pivoting; M is destroyed, Y <- M^-1 Y.
        n = M.shape[0]
        k = Y.shape[1]
        for col in range(n):
            p = col
            best = abs(M[col, col])
            for r in range(col + 1, n):
                v = abs(M[r, col])
                if v > best:
                    best = v
                    p = r
            if p != col:
                for c in range(n):
                    M[col, c], M[p, c] = M[p, c], M[col, c]
                for c in range(k):
                    Y[col, c], Y[p, c] = Y[p, c], Y[col, c]
            piv = M[col, col]
            for r in range(col + 1, n):
                f = M[r, col] / piv
                if f != 0:
                    for c in range(col + 1, n):
                        M[r, c] -= f * M[col, c]
                    for c in range(k):
                        Y[r, c] -= f * Y[col, c]
        for col in range(n - 1, -1, -1):
            piv = M[col, col]
            for c in range(k):
                acc = Y[col, c]
                for q in range(col + 1, n):
                    acc -= M[col, q] * Y[q, c]
                Y[col, c] = acc / piv

    @njit(cache=True)
    def _herm_lam_min(Phi):
        m = Phi.shape[0]
        if m == 1:
            return Phi[0, 0].real
        if m == 2:
            a = Phi[0, 0].real
            d = Phi[1, 1].real
            h = 0.5 * (a - d)
            return 0.5 * (a + d) - np.sqrt(h * h + abs(Phi[0, 1]) ** 2)
        return np.linalg.eigvalsh(Phi)[0]

    @njit(cache=True, parallel=True)
    def _gamma_grid_numba(A, B, C, D, eigA, xis, omegas, sing_tol):
        n, m = B.shape
        out = np.empty((xis.size, omegas.size))
        for i in prange(xis.size):
            xi = xis[i]
            M = np.empty((n, n), dtype=np.complex128)
            Y = np.empty((n, m), dtype=np.complex128)
            Phi = np.empty((m, m), dtype=np.complex128)
            T = np.empty((m, m), dtype=np.complex128)
            for j in range(omegas.size):
                s = complex(-0.5 * xi, omegas[j])
                dist = np.inf
                for q in range(eigA.size):
                    d = abs(s - eigA[q])
                    if d < dist:
                        dist = d
                if dist <= sing_tol:
                    out[i, j] = np.nan
                    continue
                for r in range(n):
                    for c in range(n):
                        M[r, c] = -A[r, c]
                    M[r, r] += s
                    for c in range(m):
                        Y[r, c] = B[r, c]
                _csolve_inplace(M, Y)
                for r in range(m):
                    for c in range(m):
                        acc = complex(D[r, c], 0.0)
                        for q in range(n):
                            acc += C[r, q] * Y[q, c]
                        T[r, c] = acc
                    T[r, r] -= 0.5 * xi
                for r in range(m):
                    for c in range(m):
                        Phi[r, c] = T[r, c] + np.conj(T[c, r])
                out[i, j] = _herm_lam_min(Phi)
        return out

    @njit(cache=True)
    def _sigma_min_grid_numba(A, omegas):
        n = A.shape[0]
        out = np.empty(omegas.size)
        M = np.empty((n, n), dtype=np.complex128)
        for j in range(omegas.size):
            for r in range(n):
                for c in range(n):
                    M[r, c] = A[r, c]
                M[r, r] -= 1j * omegas[j]
            sv = np.linalg.svd(M)[1]
            out[j] = sv[-1]
        return out

    @njit(cache=True)
    def _cholesky_ok(M, L):
        # In-place Cholesky attempt; True iff M is numerically positive definite.
        N = M.shape[0]
        for j in range(N):
            s = M[j, j]
            for k in range(j):
                s -= L[j, k] * L[j, k]
            if not s > 0.0:
                return False
            d = np.sqrt(s)
            L[j, j] = d
            for i in range(j + 1, N):
                t = M[i, j]
                for k in range(j):
                    t -= L[i, k] * L[j, k]
                L[i, j] = t / d
        return True

    @njit(cache=True)
    def _pd_at(W, E, t, S, L):
        N = W.shape[0]
        for r in range(N):
            for c in range(N):
                S[r, c] = W[r, c] + t * E[r, c]
        return _cholesky_ok(S, L)

    @njit(cache=True)
    def _singular_steps_numba(W, Xhat, deltas, t_max):
        k, N, _ = deltas.shape
        out = np.empty(k)
        S = np.empty((N, N))
        L = np.zeros((N, N))
        for q in range(k):
            XD = Xhat @ deltas[q]
            E = XD + XD.T
            lo = 0.0
            hi = 1.0
            found = False
            for _ in range(GROWTH_STEPS):
                if hi > t_max:
                    break
                if _pd_at(W, E, hi, S, L):
                    lo = hi
                    hi *= 2.0
                else:
                    found = True
                    break
            if not found:
                out[q] = np.inf
                continue
            for _ in range(BISECTION_STEPS):
                mid = 0.5 * (lo + hi)
                if _pd_at(W, E, mid, S, L):
                    lo = mid
                else:
                    hi = mid
            out[q] = hi
        return out


# ------------------------------------------------------------------- dispatch

def gamma_grid(A, B, C, D, xis, omegas, backend=None):
    """Smallest eigenvalue of the shifted Popov function on a (xi, omega) grid.

    Entries where ``i*omega - xi/2`` sits on an eigenvalue of ``A`` are NaN.
    """
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    C = np.ascontiguousarray(C, dtype=float)
    D = np.ascontiguousarray(D, dtype=float)
    xis = np.ascontiguousarray(np.atleast_1d(xis), dtype=float)
    omegas = np.ascontiguousarray(np.atleast_1d(omegas), dtype=float)
    eigA = np.ascontiguousarray(np.linalg.eigvals(A).astype(complex)) if A.size else np.zeros(0, complex)
    sing_tol = resolvent_tolerance(A)
    if _backend.resolve(backend) == "numba":
        return _gamma_grid_numba(A, B, C, D, eigA, xis, omegas, sing_tol)
    return _gamma_grid_numpy(A, B, C, D, eigA, xis, omegas, sing_tol)


def sigma_min_grid(A, omegas, backend=None):
    """``sigma_min(A - i*omega*I)`` for each omega.

    Defaults to numpy even when numba is available: the batched LAPACK SVD
    beats per-point calls from compiled code. Pass ``backend="numba"`` to
    force the compiled loop.
    """
    A = np.ascontiguousarray(A, dtype=float)
    omegas = np.ascontiguousarray(np.atleast_1d(omegas), dtype=float)
    if backend == "numba" and _backend.resolve(backend) == "numba":
        return _sigma_min_grid_numba(A, omegas)
    return _sigma_min_grid_numpy(A, omegas)


def singular_steps(W, Xhat, deltas, t_max=1e8, backend=None):
    """Per direction, the smallest t > 0 with ``W + t(Xhat D + D^T Xhat)`` not PD.

    ``W`` must be positive definite. Directions along which no such t exists
    below ``t_max`` give ``inf``.
    """
    W = np.ascontiguousarray(W, dtype=float)
    Xhat = np.ascontiguousarray(Xhat, dtype=float)
    deltas = np.ascontiguousarray(deltas, dtype=float)
    if deltas.ndim == 2:
        deltas = deltas[None]
    if _backend.resolve(backend) == "numba":
        return _singular_steps_numba(W, Xhat, deltas, float(t_max))
    return _singular_steps_numpy(W, Xhat, deltas, float(t_max))


def resolvent_tolerance(A):
    return 1e-13 * (1.0 + np.linalg.norm(A)) if np.size(A) else 0.0
