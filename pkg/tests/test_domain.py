import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aolreg.domain import (
    BoxSequence,
    Dataset,
    DictionaryHull,
    FiniteList,
    Member,
    MemberBudgetError,
    Mixture,
    Predictor,
    VcIndicator,
    enumerate_members,
    evaluate,
    member_table,
    resolve_grid_step,
    split_threeway,
)


def test_dataset_rejects_unknown_atom():
    with pytest.raises(ValueError, match="unknown design point"):
        Dataset([0, 3], [0.0, 1.0], 3)


def test_dataset_rejects_labels_outside_unit_interval():
    with pytest.raises(ValueError):
        Dataset([0], [1.5], 2)


def test_dataset_is_read_only():
    d = Dataset([0, 1], [0.0, 1.0], 2)
    with pytest.raises(ValueError):
        d.x[0] = 1


def test_stats_and_risk():
    d = Dataset([0, 0, 1], [1.0, 0.0, 1.0], 2)
    st_ = d.stats
    assert st_.counts.tolist() == [2, 1]
    assert st_.sums.tolist() == [1.0, 1.0]
    # direct: ((0.5-1)^2 + 0.5^2 + (0.2-1)^2) / 3
    assert st_.risk(np.array([0.5, 0.2])) == pytest.approx((0.25 + 0.25 + 0.64) / 3)


def test_split_threeway_blocks():
    d = Dataset(np.arange(9) % 3, np.linspace(0, 1, 9), 3)
    sp = split_threeway(d)
    assert sp.s.n == sp.s_prime.n == sp.s_dprime.n == 3
    assert np.array_equal(sp.s_prime.y, d.y[3:6])


def test_split_threeway_needs_multiple_of_three():
    with pytest.raises(ValueError):
        split_threeway(Dataset([0, 0, 0, 0], [0, 0, 0, 0], 1))


def test_predictor_values_in_unit_interval():
    with pytest.raises(ValueError):
        Predictor([0.5, 1.2])
    p = Predictor([0.0, 1.0 + 1e-13])
    assert p.values[1] == 1.0


def test_mixture_weights_on_simplex():
    a, b = Member([0.0, 1.0]), Member([1.0, 1.0])
    m = Mixture([a, b], [0.25, 0.75])
    assert np.allclose(m.values, [0.75, 1.0])
    with pytest.raises(ValueError):
        Mixture([a, b], [0.5, 0.6])


def test_evaluate():
    p = Predictor([0.1, 0.2, 0.3])
    assert evaluate(p, 2) == 0.3
    assert np.allclose(evaluate(p, [0, 0, 1]), [0.1, 0.1, 0.2])
    with pytest.raises(IndexError, match="unknown design point"):
        evaluate(p, 3)


def test_box_grid_includes_endpoints():
    spec = BoxSequence(2.0, 4, 0.3)
    for a in range(4):
        r = (a + 1) ** -0.5
        g = spec.grid(a)
        assert g[0] == pytest.approx((1 - r) / 2)
        assert g[-1] == pytest.approx((1 + r) / 2)
        assert np.all(np.diff(g) > 0)
        assert np.all(np.diff(g) <= 0.15 + 1e-12)


def test_box_beyond_J_is_constant():
    spec = BoxSequence(1.0, 2, 0.5, support=4)
    assert spec.grid(2).tolist() == [0.5]
    assert spec.grid(3).tolist() == [0.5]
    assert spec.radii()[2:].tolist() == [0.0, 0.0]


def test_box_grid_step_capped():
    with pytest.raises(ValueError):
        BoxSequence(2.0, 4, 1.5)


def test_resolve_grid_step_default():
    spec = resolve_grid_step(BoxSequence(2.0, 4), 0.2)
    assert spec.grid_step == pytest.approx(0.1)
    assert resolve_grid_step(BoxSequence(2.0, 4), 0.2, 0.05).grid_step == 0.05


def test_member_table_box_is_product():
    spec = BoxSequence(2.0, 2, 0.5)
    T = member_table(spec, 1000)
    sizes = [spec.grid(0).size, spec.grid(1).size]
    assert T.shape == (math.prod(sizes), 2)
    assert spec.member_count() == T.shape[0]
    assert len({tuple(r) for r in T}) == T.shape[0]


def test_member_budget_error():
    spec = BoxSequence(1.0, 6, 0.01)
    with pytest.raises(MemberBudgetError) as ei:
        member_table(spec, 100)
    assert ei.value.required > 100


def test_vc_members_ordered_by_size_then_lex():
    spec = VcIndicator(0.75, 2, 3)
    T = member_table(spec, 100)
    assert T.shape == (1 + 3 + 3, 3)
    assert T[0].tolist() == [0, 0, 0]
    assert T[1].tolist() == [0.75, 0, 0]
    assert T[4].tolist() == [0.75, 0.75, 0]
    assert spec.member_count() == 7


def test_vc_shifted_family():
    spec = VcIndicator(0.25, 1, 3, base=0.5)
    assert spec.indicator([1]).tolist() == [0.5, 0.75, 0.5]


def test_enumerate_members_indices():
    ms = enumerate_members(FiniteList([[0.0], [1.0]]), 10)
    assert [m.index for m in ms] == [0, 1]


def test_dictionary_patterns():
    hull = DictionaryHull(np.random.default_rng(0).random((4, 3)), 2)
    pats = list(hull.patterns())
    assert pats[:4] == [(0,), (1,), (2,), (3,)]
    assert pats[4] == (0, 1)
    assert len(pats) == hull.pattern_count() == 4 + 6
    with pytest.raises(MemberBudgetError):
        member_table(hull, 10)


@given(st.lists(st.tuples(st.integers(0, 4), st.floats(0, 1)), min_size=1, max_size=30),
       st.lists(st.floats(0, 1), min_size=5, max_size=5))
def test_risk_from_stats_matches_direct(pairs, vals):
    x, y = zip(*pairs)
    d = Dataset(np.array(x), np.array(y), 5)
    v = np.array(vals)
    direct = float(np.mean((v[np.array(x)] - np.array(y)) ** 2))
    assert d.stats.risk(v) == pytest.approx(direct, abs=1e-12)


@given(st.floats(0.5, 4.0), st.integers(1, 6), st.floats(0.05, 1.0))
def test_box_grid_inside_bounds(p, J, frac):
    h = frac * 2.0 * J ** (-1.0 / p)
    spec = BoxSequence(p, J, h)
    lo, hi = spec.bounds()
    vals, off = spec.grid_table()
    for a in range(J):
        g = vals[off[a]:off[a + 1]]
        assert g.min() >= lo[a] - 1e-12 and g.max() <= hi[a] + 1e-12
        assert np.all(np.diff(g) <= h / 2 + 1e-12)
