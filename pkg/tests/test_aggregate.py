import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aolreg.aggregate import AggregatorSpec, ew_aggregate, ew_weights, ms_aggregate, segment_ls, star_aggregate
from aolreg.domain import Dataset, Member
from aolreg.empirical import emp_risk


def test_segment_ls_closed_form():
    d = Dataset([0, 0], [0.0, 1.0], 1)
    # risk of (1 - lam) * 0 + lam * 1 is minimized at the label mean 1/2
    assert segment_ls(Member([0.0]), Member([1.0]), d) == pytest.approx(0.5)
    assert segment_ls(Member([0.3]), Member([0.3]), d) == 0.0
    assert segment_ls(Member([0.0]), Member([0.25]), d) == 1.0


def test_star_beats_both_endpoints():
    d = Dataset([0, 0], [0.0, 1.0], 1)
    out = star_aggregate([Member([0.0]), Member([1.0])], d)
    assert out.values[0] == pytest.approx(0.5)
    assert emp_risk(out, d) == pytest.approx(0.25)


def test_star_returns_erm_when_no_segment_helps():
    d = Dataset([0], [0.5], 1)
    out = star_aggregate([Member([0.5]), Member([0.0])], d)
    assert out.values[0] == 0.5


def test_ew_weights():
    w = ew_weights(np.array([0.0, np.log(2) / 4]), 1, 4.0)
    assert np.allclose(w, [2 / 3, 1 / 3])
    assert np.allclose(ew_weights(np.array([1e6, 1e6 + 1]), 10, 4.0).sum(), 1.0)


def test_ew_aggregate_mixture():
    d = Dataset([0], [1.0], 1)
    out = ew_aggregate([Member([1.0]), Member([0.0])], d, beta=1.0)
    # risks 0 and 1, n = 1: weights proportional to 1 and e^-1
    e = np.exp(-1.0)
    assert out.values[0] == pytest.approx(1.0 / (1.0 + e))


def test_spec_validation():
    with pytest.raises(ValueError):
        AggregatorSpec("median")
    with pytest.raises(ValueError):
        AggregatorSpec("exp-weights", beta=0.0)
    with pytest.raises(ValueError):
        star_aggregate([], Dataset([0], [0.0], 1))


def test_ms_aggregate_dispatch():
    d = Dataset([0, 0], [0.0, 1.0], 1)
    cands = [Member([0.0]), Member([1.0])]
    assert ms_aggregate(AggregatorSpec("star"), cands, d).values[0] == pytest.approx(0.5)
    assert ms_aggregate(AggregatorSpec("exp-weights", 4.0), cands, d).values[0] == pytest.approx(0.5)


def _brute_star(T, d):
    risks = [d.stats.risk(t) for t in T]
    i0 = int(np.argmin(risks))
    lams = np.linspace(0, 1, 2001)
    best = risks[i0]
    for t in T:
        for lam in lams:
            best = min(best, d.stats.risk((1 - lam) * T[i0] + lam * t))
    return best


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6), st.integers(1, 5), st.integers(1, 30))
def test_star_never_worse_than_best_candidate(seed, m, k, n):
    rng = np.random.default_rng(seed)
    T = rng.random((m, k))
    d = Dataset(rng.integers(0, k, n), rng.random(n), k)
    out = star_aggregate(T, d)
    r = emp_risk(out, d)
    assert r <= min(d.stats.risk(t) for t in T) + 1e-12
    # the closed-form segment search is at least as good as a fine lambda grid
    assert r <= _brute_star(T, d) + 1e-12
