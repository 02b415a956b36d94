import pytest
from yardsat.errors import ModelError
from yardsat.graph import build_disjunctive_graph
from yardsat.instance import parse_instance, compute_derived
from yardsat.model import (assemble_model, expected_size, cut_bounds, solve_model,
                           MAX_SERVED, FEASIBILITY, MIN_MAX_UTILIZATION)
from yardsat.solver import ConstraintPool
from conftest import one_track, scenario


def _setup(inst):
    derived = compute_derived(inst)
    return build_disjunctive_graph(inst, derived), derived


def _full_pool(graph):
    pool = ConstraintPool()
    for c in graph.tuples:
        pool.add_pair(c.pair)
    return pool


def _three_on_two():
    doc = one_track([('T1', 'fixed', 10, 40), ('T2', 'candidate', [0, 60], [60, 110]),
                     ('T3', 'candidate', [0, 60], [60, 110])], capacity=2)
    return parse_instance(doc)


@pytest.mark.parametrize('objective', [MAX_SERVED, FEASIBILITY, MIN_MAX_UTILIZATION])
def test_expected_size_on_toy(toy, objective):
    graph, derived = _setup(toy)
    floor = 1 if objective == FEASIBILITY else None
    for pool in (None, _full_pool(graph)):
        model = assemble_model(graph, toy, derived, pool, objective, floor)
        assert expected_size(graph, toy, derived, pool, objective) == (len(model.catalog),
                                                                       len(model.constraints))


@pytest.mark.parametrize('index', [0, 3])
def test_expected_size_on_scenarios(index):
    inst = scenario(index)
    graph, derived = _setup(inst)
    pool = _full_pool(graph)
    for use_cuts in (True, False):
        model = assemble_model(graph, inst, derived, pool, use_cuts=use_cuts)
        assert expected_size(graph, inst, derived, pool, use_cuts=use_cuts) == (len(model.catalog),
                                                                                len(model.constraints))


def test_tags(toy):
    graph, derived = _setup(toy)
    counts = assemble_model(graph, toy, derived, _full_pool(graph)).tag_counts()
    assert counts['fixed-trains'] == 1
    assert counts['plan-selection'] == 2
    assert counts['disjunction-selection'] == 1
    assert counts['utilization-cap'] == 1
    assert counts['capacity-cuts'] == 3
    assert 'capacity' not in counts


def test_stay_cut_on_fifteen_tracks():
    # a 300 minute minimum stay against 15 tracks for one day
    doc = one_track([('T1', 'fixed', 0, 300)], period=1440, capacity=15, duration=300)
    doc['resources'].append({'id': 'spare', 'capacity': 1})
    inst = parse_instance(doc)
    bounds = cut_bounds(inst, compute_derived(inst))
    assert bounds.stay == {'T1': 3000}
    assert bounds.stay_rhs == pytest.approx(0.85 * 15 * 14400)
    assert int(bounds.stay_rhs // bounds.stay['T1']) == 61
    # occupation adds the release tail
    assert bounds.cardinality == 60
    assert list(bounds.occupation_rhs) == ['track']


def test_cuts_need_a_period(toy):
    plain = parse_instance(one_track([('T1', 'fixed', 10, 40)], period=None))
    assert cut_bounds(plain, compute_derived(plain)) is None
    bounds = cut_bounds(toy, compute_derived(toy))
    assert bounds.cardinality == 3
    assert bounds.stay == {'T1': 300, 'T2': 0}


def test_capacity_rows():
    inst = _three_on_two()
    graph, derived = _setup(inst)
    pool = _full_pool(graph)
    pool.add_q('track', (('T1/load', 0), ('T2/load', 0)))
    pool.add_q('track', (('T1/load', 0), ('T2/load', 0), ('T3/load', 0)))
    rows = assemble_model(graph, inst, derived, pool).rows('capacity')
    assert [(len(r.terms), r.rhs) for r in rows] == [(1, 0), (3, 2)]
    assert all(r.sense == '<=' for r in rows)


def test_bad_pool_sets():
    inst = _three_on_two()
    graph, derived = _setup(inst)
    pool = _full_pool(graph)
    pool.add_q('track', (('T9/load', 0), ('T1/load', 0)))
    with pytest.raises(ModelError):
        assemble_model(graph, inst, derived, pool)
    pool = ConstraintPool()
    pool.add_q('track', (('T1/load', 0), ('T2/load', 0)))
    with pytest.raises(ModelError):
        assemble_model(graph, inst, derived, pool)


def test_objective_checks(toy):
    graph, derived = _setup(toy)
    with pytest.raises(ModelError):
        assemble_model(graph, toy, derived, objective='most-trains')
    with pytest.raises(ModelError):
        assemble_model(graph, toy, derived, objective=FEASIBILITY)


def test_unusable_nodes():
    inst = parse_instance(one_track([('T1', 'fixed', 10, 40), ('T2', 'candidate', [0, 10], [10, 20])]))
    graph, derived = _setup(inst)
    model = assemble_model(graph, inst, derived)
    assert model.rows('unusable-node')
    result = solve_model(model)
    assert result.status == 'optimal'
    assert result.objective == pytest.approx(1)
    assert result.value(model, 'phi', 'T2') < 0.5


def test_solve_toy(toy):
    graph, derived = _setup(toy)
    model = assemble_model(graph, toy, derived, _full_pool(graph))
    result = solve_model(model)
    assert result.status == 'optimal'
    assert result.objective == pytest.approx(2)
    assert result.value(model, 'sigma', 'T2/load') >= 410 - 1e-6
    assert result.value(model, 'sigma', 'T1/load') == pytest.approx(100)


def test_floor_beyond_reach():
    inst = parse_instance(one_track([('T1', 'fixed', 10, 40), ('T2', 'candidate', [10, 20], [40, 50])]))
    graph, derived = _setup(inst)
    model = assemble_model(graph, inst, derived, _full_pool(graph), FEASIBILITY, floor=2)
    assert solve_model(model).status == 'infeasible'
