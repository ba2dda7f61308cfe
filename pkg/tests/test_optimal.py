import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phrobust.exceptions import NotStrictlyPassive
from phrobust.model import (
    assemble_w,
    eval_gamma,
    lam_min,
    shift_model,
    validate_model,
    xi_star,
)
from phrobust.optimal import (
    classify_passivity,
    max_bisection_steps,
    negative_intervals,
    optimal_ph,
    passivity_status,
    real_shift_roots,
    sxi_at,
    xi_accelerated,
    xi_bisection,
    xi_upper_bound,
)
from phrobust.oracle import interior_certificates
from phrobust.radius import ph_radius
from phrobust.riccati import extremal_solutions

from conftest import passive_model

TAU = 1e-6


# ------------------------------------------------------------------- status

def test_status_examples(M1, M1u):
    st0 = passivity_status(M1, 0.0)
    assert st0.a1 and st0.a2 and st0.a3 and st0.crossings == ()
    st3 = passivity_status(M1, 3.0)
    assert not st3.a1 and not st3.a2
    stu = passivity_status(M1u, 0.0)
    assert not stu.a3 and stu.crossings == (0.0,)
    st2 = passivity_status(M1, 2.0)
    assert st2.degenerate and not st2.a3


def test_classify(M1, M1u):
    assert classify_passivity(M1) == "strict"
    assert classify_passivity(M1u) == "non-passive"
    assert classify_passivity(validate_model(0, 1, 1, 1)) == "passive"


# -------------------------------------------------------------- upper bound

def test_upper_bound_examples(M1, M1u):
    assert xi_upper_bound(M1) == 2.0
    M = validate_model(np.diag([-1.0, -4.0]), [[1.0], [1.0]], [[1.0, 1.0]], [[3.0]])
    assert passivity_status(M, 0.0).strictly_passive
    assert xi_upper_bound(M) == pytest.approx(2.0)
    assert xi_upper_bound(M1u) == 0.0


# ---------------------------------------------------------------- bisection

def test_bisection_m1(M1):
    r = xi_bisection(M1, TAU)
    assert r.xi_lo <= 2.0 <= r.xi_hi
    assert r.width <= TAU
    assert r.iterations <= 21 == max_bisection_steps(2.0, TAU)


def test_bisection_non_passive(M1u):
    r = xi_bisection(M1u, TAU)
    assert r.xi_lo == r.xi_hi == 0.0


def test_bisection_halves_exactly(M1):
    r = xi_bisection(M1, 1e-3)
    widths = [e.xi_hi - e.xi_lo for e in r.trace]
    assert widths[0] == pytest.approx(1.0)
    for a, b in zip(widths, widths[1:]):
        assert b == a / 2
    for a, b in zip(r.trace, r.trace[1:]):
        assert b.xi_lo >= a.xi_lo and b.xi_hi <= a.xi_hi


def test_bisection_rejects_bad_tau(M1):
    with pytest.raises(ValueError):
        xi_bisection(M1, 0.0)


# -------------------------------------------------------------- accelerated

def test_accelerated_m1(M1):
    a = xi_accelerated(M1, TAU)
    b = xi_bisection(M1, TAU)
    assert a.xi_lo <= 2.0 <= a.xi_hi
    assert abs(a.xi_lo - b.xi_lo) <= TAU
    assert a.evaluations < b.evaluations
    # Xi equals the upper bound here, so the first step already succeeds.
    assert a.iterations == 1 and a.xi_lo == pytest.approx(2.0 - TAU)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 6), m=st.integers(1, 3))
def test_accelerated_agrees_with_bisection(seed, n, m):
    M = passive_model(seed, n, m).model
    a = xi_accelerated(M, TAU)
    b = xi_bisection(M, TAU)
    assert abs(a.xi_lo - b.xi_lo) <= 2 * TAU
    assert a.width <= TAU * (1 + 1e-9)
    for e in a.trace:
        assert e.xi_hi <= a.xi_up_initial


# --------------------------------------------------------- negative intervals

def test_negative_intervals_examples(M1, M1u):
    assert negative_intervals(M1, 1.0) == []
    assert negative_intervals(M1u, 0.0) == []


def _a3_bound_model():
    # A corpus model whose margin is set by an imaginary-axis crossing, not by A1/A2.
    for seed in range(200):
        M = passive_model(seed, 4, 2).model
        r = xi_bisection(M, 1e-9)
        if xi_upper_bound(M) - r.xi_hi > 0.05:
            return M, r.xi_hi
    raise RuntimeError("no A3-bound model found")


def test_negative_interval_matches_dense_grid():
    M, Xi = _a3_bound_model()
    xi = Xi + 0.02 * (xi_upper_bound(M) - Xi)
    ints = negative_intervals(M, xi)
    assert ints
    wmax = 4 * max(abs(b) for a, b in ints)
    grid = np.linspace(0.0, wmax, 10_000)
    g = np.array([eval_gamma(M, xi, w)[1] for w in grid])
    neg = g < 0
    # Reconstruct intervals from the grid and compare endpoints within one step.
    step = grid[1] - grid[0]
    edges = np.flatnonzero(np.diff(neg.astype(int)))
    ref = []
    start = 0.0 if neg[0] else None
    for k in edges:
        if neg[k + 1]:
            start = grid[k + 1]
        else:
            ref.append((start, grid[k]))
    found = [(max(a, 0.0), b) for a, b in ints]
    assert len(found) == len(ref)
    for (a, b), (ra, rb) in zip(found, ref):
        assert abs(a - ra) <= step and abs(b - rb) <= step


# ------------------------------------------------------------ real roots

def test_real_shift_roots_m1(M1):
    r0 = real_shift_roots(M1, 0.0)
    assert len(r0) == 1 and r0[0] == pytest.approx(2.0, abs=1e-12)
    r = real_shift_roots(M1, 100.0)
    assert len(r) == 1 and r[0] == pytest.approx(2.0, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 5), m=st.integers(1, 3), w=st.floats(0, 10))
def test_real_shift_roots_are_roots(seed, n, m, w):
    M = passive_model(seed, n, m).model
    for xi in real_shift_roots(M, w):
        S = sxi_at(M, xi, w)
        s = np.linalg.svd(S, compute_uv=False)
        assert s[-1] <= 1e-8 * s[0]


# -------------------------------------------------------------- optimal pH

def test_optimal_ph_m1(M1):
    res = optimal_ph(M1, TAU)
    P = res.realization
    for k, v in dict(J=0, R=1, G=1, K=0, S=1, N=0).items():
        assert getattr(P, k)[0, 0] == pytest.approx(v, abs=1e-6)
    assert res.X[0, 0] == pytest.approx(1.0, abs=1e-5)
    assert ph_radius(P) == pytest.approx(1.0, abs=1e-6)
    assert res.xi_star >= res.xi.xi_lo - 2 * TAU


def test_optimal_ph_not_strict(M1u):
    with pytest.raises(NotStrictlyPassive):
        optimal_ph(M1u, TAU)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 5), m=st.integers(1, 3))
def test_optimal_ph_relations(seed, n, m):
    M = passive_model(seed, n, m).model
    res = optimal_ph(M, TAU)
    assert res.xi_star >= res.xi.xi_lo - 2 * TAU
    assert res.xi_star <= res.xi.xi_hi + 1e-7
    # The pH radius of the output is half of xi*.
    assert ph_radius(res.realization) == pytest.approx(res.xi_star / 2, abs=1e-8)


# ------------------------------------------------------------ invariants

@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 5), m=st.integers(1, 3),
       f1=st.floats(0, 1), f2=st.floats(0, 1))
def test_monotone_nesting(seed, n, m, f1, f2):
    item = passive_model(seed, n, m)
    M, X = item.model, item.X0
    xs = xi_star(M, X)
    lo, hi = sorted((f1 * xs, f2 * xs))
    l_lo = lam_min(assemble_w(shift_model(M, lo), X))
    l_hi = lam_min(assemble_w(shift_model(M, hi), X))
    assert l_hi <= l_lo + 1e-10 * (1 + abs(l_lo))
    assert xi_star(shift_model(M, lo), X) == pytest.approx(xs - lo, abs=1e-9 * (1 + xs))


def test_sup_characterization(small_corpus, rng):
    for item in small_corpus[:6]:
        M = item.model
        r = xi_bisection(M, TAU)
        certs = interior_certificates(M, 6, rng, X0=item.X0, xi_max=r.xi_lo)
        certs += [s.X for s in extremal_solutions(M)]
        for X in certs:
            assert xi_star(M, X) <= r.xi_hi + 1e-7
        best = optimal_ph(M, TAU).xi_star
        assert best >= r.xi_lo - 2 * TAU


def test_continuity_witness(small_corpus):
    for item in small_corpus[:4]:
        M = item.model
        up = xi_upper_bound(M)
        for xi in np.linspace(0.0, 0.99 * up, 7):
            st_ = passivity_status(M, xi)
            w = np.linspace(0.0, 30.0, 600)
            g = np.array([eval_gamma(M, xi, x)[1] for x in w])
            flips = np.flatnonzero(np.diff(np.sign(g)) != 0)
            for k in flips:
                # Every sign change of gamma is bracketed by a reported crossing.
                assert any(w[k] - 1e-9 <= c <= w[k + 1] + 1e-9 for c in st_.crossings)
            if not flips.size and st_.a1 and st_.a2:
                assert math.isfinite(g.min())
