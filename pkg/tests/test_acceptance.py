"""Acceptance gate: one PASS/FAIL line per criterion, tolerances pinned below."""

import csv
import io
import time

import numpy as np
import pytest

from phrobust.distance import passify, stability_radius, stabilization_diagonal
from phrobust.model import (
    assemble_w,
    certify,
    frequency_scan,
    lam_min,
    transform_to_ph,
    transformed_model,
    validate_model,
    xi_star,
)
from phrobust.optimal import (
    max_bisection_steps,
    optimal_ph,
    passivity_status,
    xi_accelerated,
    xi_bisection,
    xi_upper_bound,
)
from phrobust.oracle import (
    GridSpec,
    grid_xi_oracle,
    interior_certificates,
    passive_corpus,
    random_perturbation_search,
)
from phrobust.radius import apply_perturbation, lambda_max_profile, x_passivity_radius
from phrobust.riccati import extremal_solutions

pytestmark = pytest.mark.acceptance

# Pinned tolerances.
ARE_TOL = 1e-10
XI_STAR_TOL = 1e-10
RHO_TOL = 1e-8
TAU = 1e-6
MAX_STEPS = 21
PH_TOL = 1e-6
M1_TIME = 1.0
XI_TOL = 1e-6
REFINED_TOL = 1e-8
WORST_CASE_TOL = 1e-7
CORPUS_SIZE = 100
CORPUS_TIME = 30.0
DOMINANCE_TOL = 1e-9
INTERIOR_COUNT = 5
SEARCH_RESTARTS = 500
SEARCH_SEED = 2024
SANDWICH_TOL = 1e-8
STAB_TOL = 1e-8
TOUCH_TOL = 1e-6
PROFILE_POINTS = 64


@pytest.fixture(scope="module")
def corpus():
    return passive_corpus(CORPUS_SIZE)


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


def test_criterion_1_scalar_passive(report):
    t0 = time.perf_counter()
    M = validate_model(-1.0, 1.0, 1.0, 1.0)
    lo, hi = extremal_solutions(M)
    c_are = (abs(lo.X[0, 0] - (3 - 2 * np.sqrt(2))) <= ARE_TOL
             and abs(hi.X[0, 0] - (3 + 2 * np.sqrt(2))) <= ARE_TOL)
    c_xs = abs(xi_star(M, 1.0) - 2.0) <= XI_STAR_TOL
    r = x_passivity_radius(M, 1.0)
    c_rho = abs(r.rho - 1.0) <= RHO_TOL and abs(r.gamma_star - 1.0) <= 1e-6
    b = xi_bisection(M, TAU)
    c_bis = (b.xi_lo <= 2.0 <= b.xi_hi and b.width <= TAU
             and b.iterations <= MAX_STEPS and max_bisection_steps(xi_upper_bound(M), TAU) == MAX_STEPS)
    P = optimal_ph(M, TAU).realization
    target = dict(J=0, R=1, G=1, K=0, S=1, N=0)
    ph_err = max(abs(getattr(P, k)[0, 0] - v) for k, v in target.items())
    c_ph = ph_err <= PH_TOL
    dt = time.perf_counter() - t0
    ok = c_are and c_xs and c_rho and c_bis and c_ph and dt < M1_TIME
    report(1, ok, f"ARE {c_are}, xi* {c_xs}, rho {r.rho:.12g}, bracket [{b.xi_lo:.9g}, {b.xi_hi:.9g}] "
                  f"in {b.iterations} steps, pH err {ph_err:.1e}, {dt:.3f}s")
    assert ok


def test_criterion_2_scalar_nonpassive(report):
    t0 = time.perf_counter()
    M = validate_model(1.0, 1.0, 1.0, 1.0)
    r = passify(M, TAU)
    c_xi = abs(r.xi - 2.0) <= XI_TOL
    c_norms = abs(r.spectral_norm - 0.5 * r.xi) <= 1e-15 and abs(r.frobenius_diagonal - r.xi / np.sqrt(2)) <= 1e-15
    c_near = abs(r.spectral_norm - 1.0) <= XI_TOL and abs(r.frobenius_diagonal - np.sqrt(2)) <= XI_TOL
    c_ref = r.frobenius_refined <= 1.0 + REFINED_TOL
    Mp = apply_perturbation(M, r.refined_perturbation)
    cert = certify(Mp, r.certificate.X, REFINED_TOL)
    c_cert = cert.kind in ("interior", "boundary") and lam_min(assemble_w(Mp, r.certificate.X)) >= -REFINED_TOL
    dt = time.perf_counter() - t0
    ok = c_xi and c_norms and c_near and c_ref and c_cert and dt < M1_TIME
    report(2, ok, f"Xi {r.xi:.10g}, norms {r.spectral_norm:.9g}/{r.frobenius_diagonal:.9g}, "
                  f"refined {r.frobenius_refined:.12g}, certificate {cert.kind}, {dt:.3f}s")
    assert ok


def test_criterion_3_worst_case(corpus, report):
    t0 = time.perf_counter()
    worst, chain = 0.0, True
    for item in corpus:
        M, X = item.model, item.X0
        r = x_passivity_radius(M, X)
        W = assemble_w(M, X)
        lw = lam_min(assemble_w(apply_perturbation(M, r.perturbation), X))
        worst = max(worst, abs(lw) / np.linalg.norm(W, 2))
        chain &= r.lower_bound <= r.rho * (1 + 1e-12) and r.rho <= r.upper_bound * (1 + 1e-12)
    dt = time.perf_counter() - t0
    ok = worst <= WORST_CASE_TOL and chain and dt < CORPUS_TIME
    report(3, ok, f"{len(corpus)} models, max |lambda_min|/||W|| {worst:.1e}, bound chain {chain}, {dt:.2f}s")
    assert ok


def test_criterion_4_ph_dominance(corpus, report):
    rng = np.random.default_rng(7)
    worst = np.inf
    count = 0
    for item in corpus:
        M = item.model
        for X in interior_certificates(M, INTERIOR_COUNT, rng, X0=item.X0):
            assert certify(M, X).kind == "interior"
            rho_x = x_passivity_radius(M, X).rho
            T = transform_to_ph(M, X).T
            rho_i = x_passivity_radius(transformed_model(M, T), np.eye(M.n)).rho
            worst = min(worst, rho_i - rho_x)
            count += 1
    ok = worst >= -DOMINANCE_TOL and count == INTERIOR_COUNT * len(corpus)
    report(4, ok, f"{count} certificates, min(rho_T(I) - rho(X)) {worst:.3e}")
    assert ok


def test_criterion_5_method_agreement(corpus, report):
    d_acc, d_grid, unimodal_fail = 0.0, 0.0, 0
    grid_ok = True
    for item in corpus:
        M = item.model
        b = xi_bisection(M, TAU)
        a = xi_accelerated(M, TAU)
        d_acc = max(d_acc, abs(a.xi_lo - b.xi_lo), abs(a.xi_hi - b.xi_hi))
        g = GridSpec(101, 1001, 10.0 * (1 + np.linalg.norm(M.A, 2)), log_spacing=True)
        step = lam_min(M.D.T + M.D) / (g.xi_points - 1)
        est = grid_xi_oracle(M, g)
        d_grid = max(d_grid, abs(est - b.xi_lo) / step)
        grid_ok &= abs(est - b.xi_lo) <= step + TAU
        f = lambda_max_profile(M, item.X0, np.logspace(-3, 3, PROFILE_POINTS))
        d = np.sign(np.diff(f))
        d = d[d != 0]
        ch = np.flatnonzero(np.diff(d))
        if len(ch) > 1 or (len(ch) == 1 and not d[0] < 0 < d[-1]):
            unimodal_fail += 1
    ok = d_acc <= 2 * TAU and grid_ok and unimodal_fail == 0
    report(5, ok, f"max |accel - bisect| {d_acc:.2e}, max grid error {d_grid:.2f} steps, "
                  f"non-unimodal profiles {unimodal_fail}")
    assert ok


def test_criterion_6_sandwich(corpus, report):
    worst = np.inf
    for k, item in enumerate(corpus):
        rho = x_passivity_radius(item.model, item.X0).rho
        rs = random_perturbation_search(item.model, item.X0, SEARCH_RESTARTS, seed=SEARCH_SEED + k)
        worst = min(worst, rs - rho)
    ok = worst >= -SANDWICH_TOL
    report(6, ok, f"min(search - rho) {worst:.3e} over {len(corpus)} models")
    assert ok


def test_criterion_7_stability(report):
    r = stabilization_diagonal([[1.0]])
    c_xi = r.xi == 2.0
    rng = np.random.default_rng(3)
    worst_r, worst_axis = 0.0, 0.0
    for n in (1, 2, 3, 4, 5, 6):
        for _ in range(5):
            Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
            lam = -rng.uniform(0.1, 3.0, n)
            A = Q @ np.diag(lam) @ Q.T
            if n >= 2:
                # A rotation block keeps the matrix normal with a complex pair.
                R = np.diag(lam).astype(float)
                R[0, 1], R[1, 0] = 1.5, -1.5
                R[1, 1] = R[0, 0]
                A = Q @ R @ Q.T
            sr = stability_radius(A)
            ref = np.min(np.abs(np.linalg.eigvals(A).real))
            worst_r = max(worst_r, abs(sr.radius - ref))
            ev = np.linalg.eigvals(A + sr.destabilizer)
            worst_axis = max(worst_axis, np.min(np.abs(ev.real)))
    ok = c_xi and worst_r <= STAB_TOL and worst_axis <= STAB_TOL
    report(7, ok, f"Xi([[1]]) = {r.xi}, max |radius - min|Re lambda|| {worst_r:.1e}, "
                  f"max destabilized |Re| {worst_axis:.1e}")
    assert ok


def _scan_rows(M, xi, omegas):
    text = frequency_scan(M, [xi], omegas).to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["xi", "omega", "gamma"]
    return np.array([[float(v) for v in r] for r in rows[1:]])


def test_criterion_8_figure_shapes(corpus, report):
    # A corpus model whose margin comes from an imaginary-axis touch at positive frequency.
    for item in corpus:
        M = item.model
        up = xi_upper_bound(M)
        b = xi_bisection(M, 1e-12)
        if up - b.xi_hi <= 0.05 * up:
            continue
        touch = passivity_status(M, b.xi_hi).crossings
        if touch and min(touch) > 1e-3:
            break
    else:
        pytest.fail("no crossing-limited model in corpus")
    Xi = b.xi_hi
    omegas = np.union1d(np.linspace(0.0, 4.0 * max(touch + (1.0,)), 4001), touch)
    below = _scan_rows(M, 0.5 * Xi, omegas)[:, 2]
    at = _scan_rows(M, Xi, omegas)[:, 2]
    above_xi = min(1.1 * Xi, up)
    above = _scan_rows(M, above_xi, omegas)[:, 2]
    neg = above < 0
    inner = np.flatnonzero(neg)
    open_interval = inner.size > 0 and not neg[0] and not neg[-1]
    ok = below.min() > 0 and at.min() <= TOUCH_TOL and at.min() > -TOUCH_TOL and open_interval
    report(8, ok, f"Xi {Xi:.9g}: min gamma {below.min():.3e} / {at.min():.3e} / {above.min():.3e}, "
                  f"negative on ({omegas[inner[0]] if inner.size else np.nan:.4g}, "
                  f"{omegas[inner[-1]] if inner.size else np.nan:.4g})")
    assert ok
