import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from aolreg.domain import Dataset, Member
from aolreg.empirical import emp_risks
from aolreg.solvers import default_max_iter, erm_cell, erm_enumerate, erm_simplex, simplex_problem


def test_enumerate_picks_lowest_risk_first_on_ties():
    d = Dataset([0, 0], [0.0, 1.0], 1)
    res = erm_enumerate(np.array([[0.0], [1.0], [0.5]]), d)
    assert res.index == 2 and res.certificate == "exact-enumeration"
    res = erm_enumerate(np.array([[0.0], [1.0]]), d)
    assert res.index == 0


def test_enumerate_keeps_predictor_objects():
    d = Dataset([0], [1.0], 1)
    ms = [Member([0.0], index=7), Member([0.9], index=8)]
    assert erm_enumerate(ms, d).predictor is ms[1]


def test_erm_cell_indexes_full_list():
    d = Dataset([0], [1.0], 1)
    T = np.array([[1.0], [0.0], [0.8]])
    res = erm_cell(T, [1, 2], d, resolution=0.1)
    assert res.index == 2 and res.certificate == "refinement-net" and res.resolution == 0.1
    with pytest.raises(ValueError):
        erm_cell(T, [], d)


def test_simplex_problem_matches_risk(rng):
    A = rng.random((3, 5))
    d = Dataset(rng.integers(0, 5, 40), rng.random(40), 5)
    Q, b, c = simplex_problem(A, d)
    th = rng.dirichlet(np.ones(3))
    assert th @ Q @ th - 2 * b @ th + c == pytest.approx(d.stats.risk(th @ A))


def test_simplex_vertex_solution():
    # labels equal dictionary row 1 exactly, so theta = e_1
    D = np.array([[0.0, 0.0], [1.0, 0.5], [0.2, 0.9]])
    d = Dataset([0, 1, 0, 1], [1.0, 0.5, 1.0, 0.5], 2)
    res = erm_simplex(D, [0, 1, 2], d)
    assert res.converged and res.gap <= 1e-6
    assert np.allclose(res.predictor.values, [1.0, 0.5], atol=1e-6)


def test_simplex_rejects_bad_input():
    d = Dataset([0], [0.0], 1)
    with pytest.raises(ValueError):
        erm_simplex(np.zeros((2, 1)), [], d)
    with pytest.raises(ValueError):
        erm_simplex(np.zeros((2, 1)), [0], d, tol=0.0)


def test_default_max_iter():
    assert default_max_iter(5, 100) == int(10 * 5 * np.log(100)) + 100


def _slsqp(A, d):
    m = A.shape[0]
    f = lambda t: d.stats.risk(t @ A)
    cons = [{"type": "eq", "fun": lambda t: t.sum() - 1.0}]
    r = minimize(f, np.full(m, 1.0 / m), bounds=[(0, 1)] * m, constraints=cons, method="SLSQP",
                 options={"ftol": 1e-14, "maxiter": 500})
    return r.fun


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6))
def test_simplex_matches_independent_solver(seed, m):
    rng = np.random.default_rng(seed)
    A = rng.random((m, 6))
    d = Dataset(rng.integers(0, 6, 50), rng.random(50), 6)
    res = erm_simplex(A, np.arange(m), d, tol=1e-9)
    assert np.all(np.diff(res.trace) <= 1e-15)
    assert res.empirical_risk <= emp_risks(A, d).min() + 1e-15
    assert res.empirical_risk <= _slsqp(A, d) + 1e-8


def test_max_iter_exhaustion_reports_not_converged(rng):
    A = rng.random((6, 6))
    d = Dataset(rng.integers(0, 6, 50), rng.random(50), 6)
    res = erm_simplex(A, np.arange(6), d, tol=1e-15, max_iter=1)
    assert res.iterations <= 1
    if res.gap > 1e-15:
        assert not res.converged
