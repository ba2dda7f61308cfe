import numpy as np
import pytest

from phrobust.model import eval_gamma, validate_model, xi_star
from phrobust.oracle import (
    GridSpec,
    grid_xi_oracle,
    passive_corpus,
    random_passive_model,
    random_perturbation_search,
    scalar_are,
    scalar_gamma,
    scalar_xi_star,
)
from phrobust.optimal import passivity_status, xi_bisection
from phrobust.radius import x_passivity_radius


def test_grid_oracle_m1(M1):
    g = GridSpec(2001, 2001, 100.0)
    step = 2.0 / 2000
    assert abs(grid_xi_oracle(M1, g) - 2.0) <= step


def test_coarse_grid_not_below_fine(small_corpus):
    for item in small_corpus[:5]:
        M = item.model
        fine = GridSpec(201, 801, 50.0, log_spacing=True)
        coarse = GridSpec(51, 801, 50.0, log_spacing=True)
        f = grid_xi_oracle(M, fine)
        c = grid_xi_oracle(M, coarse)
        step_c = float(np.linalg.eigvalsh(M.D.T + M.D)[0]) / 50
        assert c >= f - step_c - 1e-12


def test_grid_oracle_matches_bisection(small_corpus):
    for item in small_corpus[:5]:
        M = item.model
        g = GridSpec(101, 1001, 10.0 * (1 + np.linalg.norm(M.A, 2)), log_spacing=True)
        step = float(np.linalg.eigvalsh(M.D.T + M.D)[0]) / 100
        assert abs(grid_xi_oracle(M, g) - xi_bisection(M, 1e-8).xi_lo) <= step + 1e-8


def test_grid_oracle_non_passive(M1u):
    assert grid_xi_oracle(M1u, GridSpec(11, 11)) == 0.0


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(1, 10)
    with pytest.raises(ValueError):
        GridSpec(10, 10, 0.0)
    w = GridSpec(3, 5, 10.0, log_spacing=True).omegas()
    assert w[0] == 0.0 and w[-1] == pytest.approx(10.0) and len(w) == 5


def test_random_search_m1(M1):
    rs = random_perturbation_search(M1, 1.0, 500, seed=3)
    assert 1.0 - 1e-8 <= rs <= 1.2
    exact = random_perturbation_search(M1, 1.0, 0, extra_directions=[np.diag([1.0, 1.0])])
    assert exact == pytest.approx(np.sqrt(2), abs=1e-8)
    best = random_perturbation_search(M1, 1.0, 0, extra_directions=[np.diag([1.0, 0.0])])
    assert best == pytest.approx(1.0, abs=1e-8)


def test_random_search_deterministic(M1):
    a = random_perturbation_search(M1, 1.0, 50, seed=7)
    b = random_perturbation_search(M1, 1.0, 50, seed=7)
    assert a == b
    with pytest.raises(ValueError):
        random_perturbation_search(M1, 1.0, 0)


def test_scalar_closed_forms(M1):
    for w in (0.0, 0.5, 3.0):
        assert scalar_gamma(-1, 1, 1, 1, 1.0, w) == pytest.approx(eval_gamma(M1, 1.0, w)[1])
    lo, hi = scalar_are(-1, 1, 1, 1)
    assert lo == pytest.approx(3 - 2 * np.sqrt(2)) and hi == pytest.approx(3 + 2 * np.sqrt(2))
    assert scalar_xi_star(-1, 1, 1, 1, 1.0) == pytest.approx(xi_star(M1, 1.0))


def test_corpus_is_strictly_passive():
    corpus = passive_corpus(10, seed=5)
    assert len(corpus) == 10
    for item in corpus:
        assert passivity_status(item.model, 0.0).strictly_passive
        assert x_passivity_radius(item.model, item.X0).rho > 0
    again = passive_corpus(10, seed=5)
    assert all(np.array_equal(a.model.A, b.model.A) for a, b in zip(corpus, again))


def test_random_passive_model_shapes():
    item = random_passive_model(np.random.default_rng(0), 3, 2)
    assert item.model.A.shape == (3, 3) and item.model.D.shape == (2, 2)
    assert item.X0.shape == (3, 3)
    assert validate_model(*item.model.matrices()).n == 3
