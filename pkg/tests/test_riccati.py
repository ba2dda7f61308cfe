import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phrobust.exceptions import ImaginaryAxisEigenvalues, NotMinimal
from phrobust.model import certify, shift_model, validate_model
from phrobust.oracle import scalar_are
from phrobust.riccati import ANTISTABILIZING, STABILIZING, extremal_solutions, riccati_residual, solve_are

from conftest import passive_model

SQ2 = np.sqrt(2.0)


def test_m1_extremal(M1):
    lo, hi = extremal_solutions(M1)
    assert lo.X[0, 0] == pytest.approx(3 - 2 * SQ2, abs=1e-12)
    assert hi.X[0, 0] == pytest.approx(3 + 2 * SQ2, abs=1e-12)
    assert np.all(lo.closed_loop_eigs.real < 0)
    assert np.all(hi.closed_loop_eigs.real > 0)


def test_scalar_closed_form_agrees():
    for a, b, c, d in ((-1, 1, 1, 1), (-2, 0.5, 1.5, 0.8), (-0.3, 2, 1, 3)):
        M = validate_model(a, b, c, d)
        lo, hi = extremal_solutions(M)
        ref = scalar_are(a, b, c, d)
        assert lo.X[0, 0] == pytest.approx(ref[0], rel=1e-10)
        assert hi.X[0, 0] == pytest.approx(ref[1], rel=1e-10)


def test_nonpassive_rejected(M1u):
    with pytest.raises(ImaginaryAxisEigenvalues):
        solve_are(M1u)


def test_non_minimal_rejected():
    M = validate_model([[-1, 0], [0, -2]], [[1], [0]], [[1, 0]], [[1]])
    with pytest.raises(NotMinimal):
        solve_are(M)


def test_unknown_mode(M1):
    with pytest.raises(ValueError):
        solve_are(M1, mode="middle")


def test_nearly_singular_d_block(M1):
    # D^T + D = 1e-8 after the shift; the explicit Hamiltonian would lose all accuracy here.
    tau = 1e-8
    sol = solve_are(shift_model(M1, 2 - tau), STABILIZING)
    assert sol.X[0, 0] == pytest.approx(1.0, abs=1e-6)
    assert sol.relative_residual < 1e-10


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 6), m=st.integers(1, 3))
def test_extremal_properties(seed, n, m):
    M = passive_model(seed, n, m).model
    lo, hi = extremal_solutions(M)
    for sol in (lo, hi):
        assert sol.relative_residual < 1e-9
        assert np.allclose(sol.X, sol.X.T)
        assert certify(M, sol.X, 1e-7).kind == "boundary"
        R = riccati_residual(M, sol.X)
        assert np.linalg.norm(R) == pytest.approx(sol.residual)
    assert np.linalg.eigvalsh(hi.X - lo.X)[0] > -1e-8 * np.linalg.norm(hi.X)
    assert lo.mode == STABILIZING and hi.mode == ANTISTABILIZING
