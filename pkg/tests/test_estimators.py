import numpy as np
import pytest

from aolreg import kernels
from aolreg.aggregate import AggregatorSpec, ms_aggregate
from aolreg.domain import BoxSequence, Dataset, DictionaryHull, FiniteList, Member, MemberBudgetError, VcIndicator, \
    member_table, split_threeway
from aolreg.empirical import EmpiricalMetricContext, emp_risk, emp_risks
from aolreg.estimators import AolConfig, aol_fit, epsilon_rule, global_erm_fit, skeleton_fit, sparse_convex_fit
from aolreg.netpart import build_partition


def _data(rng, k, n):
    return Dataset(rng.integers(0, k, n), rng.random(n), k)


def test_epsilon_rules():
    assert epsilon_rule("vc", 100) == 0.1
    assert epsilon_rule(("poly", 2), 16) == 0.5
    assert epsilon_rule({"kind": "poly", "p": 2}, 256) == 0.25
    assert epsilon_rule("poly:2", 256) == 0.25
    assert epsilon_rule({"kind": "explicit", "value": 0.3}, 5) == 0.3
    assert epsilon_rule(0.2, 1000) == 0.2
    with pytest.raises(ValueError):
        epsilon_rule("sqrt", 10)
    with pytest.raises(ValueError):
        epsilon_rule(-1.0, 10)


def test_aol_explicit_matches_manual_pipeline(rng):
    fl = FiniteList(rng.random((25, 4)))
    d = _data(rng, 4, 60)
    rec = aol_fit(fl, d, AolConfig(epsilon=0.3))
    sp = split_threeway(d)
    part = build_partition(fl.members, 0.3, EmpiricalMetricContext(sp.s))
    risks = emp_risks(fl.members, sp.s_prime)
    leaders = []
    for i in range(part.n_cells):
        idx = np.flatnonzero(part.assignment == i)
        leaders.append(Member(fl.members[idx[np.argmin(risks[idx])]]))
    expected = ms_aggregate(AggregatorSpec(), leaders, sp.s_dprime)
    assert np.allclose(rec.predictor.values, expected.values)
    assert rec.n_cells == part.n_cells and rec.epsilon == 0.3 and rec.method == "aol"
    assert rec.cell_risks.shape == (part.n_cells,)


def test_aol_star_not_worse_than_any_leader_on_last_block(rng):
    fl = FiniteList(rng.random((25, 4)))
    d = _data(rng, 4, 90)
    rec = aol_fit(fl, d, AolConfig(epsilon="vc"))
    sp = split_threeway(d)
    assert emp_risk(rec.predictor, sp.s_dprime) <= emp_risks(fl.members, sp.s_dprime).max()


def test_aol_exp_weights(rng):
    fl = FiniteList(rng.random((5, 3)))
    rec = aol_fit(fl, _data(rng, 3, 30), AolConfig(epsilon=0.05, aggregator=AggregatorSpec("exp-weights")))
    assert rec.predictor.values.shape == (3,)


@pytest.mark.parametrize("spec", [BoxSequence(2.0, 3), VcIndicator(0.75, 2, 5)])
def test_structured_and_explicit_backends_both_run(spec, rng):
    d = _data(rng, spec.support_size, 60)
    a = aol_fit(spec, d, AolConfig(epsilon=0.3, backend="structured"))
    b = aol_fit(spec, d, AolConfig(epsilon=0.3, backend="explicit"))
    sp = split_threeway(d)
    # both aggregate cell leaders, so both are at least as good as the worst member on S''
    T = member_table(spec if not isinstance(spec, BoxSequence) else spec.with_grid_step(0.15), 10 ** 6)
    worst = emp_risks(T, sp.s_dprime).max()
    assert emp_risk(a.predictor, sp.s_dprime) <= worst + 1e-12
    assert emp_risk(b.predictor, sp.s_dprime) <= worst + 1e-12


def test_single_cell_aol_equals_global_erm_then_star():
    fl = FiniteList([[0.2], [0.8]])
    d = Dataset([0] * 6, [1, 1, 0, 0, 1, 1], 1)
    rec = aol_fit(fl, d, AolConfig(epsilon=10.0))
    assert rec.n_cells == 1
    # S' = (0, 0) picks 0.2, the only leader
    assert rec.predictor.values[0] == pytest.approx(0.2)


def test_skeleton_uses_centers(rng):
    fl = FiniteList(rng.random((10, 3)))
    d = _data(rng, 3, 30)
    rec = skeleton_fit(fl, d, 10.0)
    assert rec.n_cells == 1
    assert np.allclose(rec.predictor.values, fl.members[0])


def test_global_erm_explicit_and_structured_agree(rng):
    spec = BoxSequence(2.0, 3)
    d = _data(rng, 3, 40)
    a = global_erm_fit(spec, d, grid_step=0.1, backend="explicit")
    b = global_erm_fit(spec, d, grid_step=0.1, backend="structured")
    assert np.allclose(a.predictor.values, b.predictor.values)
    c = global_erm_fit(spec, d, epsilon=0.2)
    assert np.allclose(c.predictor.values, a.predictor.values)
    v = VcIndicator(0.75, 2, 3)
    assert np.allclose(global_erm_fit(v, d, backend="explicit").predictor.values,
                       global_erm_fit(v, d, backend="structured").predictor.values)


def test_budget_errors(rng):
    hull = DictionaryHull(rng.random((4, 3)), 2)
    with pytest.raises(MemberBudgetError):
        aol_fit(hull, _data(rng, 3, 30))
    with pytest.raises(MemberBudgetError):
        sparse_convex_fit(hull, _data(rng, 3, 30), member_budget=3)
    with pytest.raises(ValueError):
        aol_fit(FiniteList([[0.0]]), _data(rng, 1, 3), AolConfig(backend="structured"))
    with pytest.raises(ValueError):
        AolConfig(backend="gpu")


def test_sparse_convex_fit(rng):
    hull = DictionaryHull(rng.uniform(0.1, 0.9, (6, 8)), 2)
    d = _data(rng, 8, 300)
    rec = sparse_convex_fit(hull, d)
    sp = split_threeway(d)
    assert rec.n_cells == hull.pattern_count()
    assert rec.extras["converged"]
    best_stage = min(emp_risk(rec.extras["stage_a"], d.block(0, 100)),
                     emp_risk(rec.extras["stage_b"], d.block(0, 100)))
    assert emp_risk(rec.predictor, sp.s) <= best_stage + 1e-12


def test_fit_record_timing(rng):
    rec = global_erm_fit(FiniteList([[0.1], [0.9]]), _data(rng, 1, 10))
    assert rec.wall_ms >= 0 and rec.method == "erm"


def test_kernel_backend_does_not_change_results(rng):
    fl = FiniteList(rng.random((40, 5)).round(1))
    d = _data(rng, 5, 60)
    a = aol_fit(fl, d, AolConfig(epsilon=0.2))
    saved = kernels.farthest_point_cover, kernels.nearest_center, kernels.segment_argmin
    try:
        kernels.farthest_point_cover = kernels._cover_np
        kernels.nearest_center = kernels._assign_np
        kernels.segment_argmin = kernels._segment_argmin_np
        b = aol_fit(fl, d, AolConfig(epsilon=0.2))
    finally:
        kernels.farthest_point_cover, kernels.nearest_center, kernels.segment_argmin = saved
    assert np.array_equal(a.predictor.values, b.predictor.values)
