from itertools import combinations
import numpy as np
import pytest
from yardsat.errors import GraphError
from yardsat.graph import build_disjunctive_graph
from yardsat.instance import parse_instance, compute_derived
from yardsat.solver import (saturate, separate_capacity, solve_feasibility, SolveOptions, Solution,
                            ConstraintPool, OPTIMAL, INFEASIBLE_AT_FLOOR, TIMEOUT, MILP)
from yardsat.validator import TrainSchedule, check_solution, check_periodic
from conftest import one_track, scenario, random_instances


def _saturated(inst, **kwargs):
    result = saturate(inst, SolveOptions(**kwargs))
    if result.solution is not None:
        verdict, _ = check_solution(result.solution, inst)
        assert verdict.ok, verdict.failures
    return result


def test_toy(toy):
    result = _saturated(toy)
    assert result.status == OPTIMAL
    assert result.solution.objective == 1
    assert result.solution.served == {'T1', 'T2'}
    assert result.statistics.incumbents[-1] == 1
    assert result.statistics.floors[0] == 1
    assert not result.heuristic


@pytest.mark.parametrize('index, optimum', [(0, 2), (1, 3), (2, 4), (3, 4)])
def test_small_yard(index, optimum):
    result = _saturated(scenario(index))
    assert result.status == OPTIMAL
    assert result.solution.objective == optimum


def test_night_break_blocks_late_train():
    result = _saturated(scenario(0))
    assert 'C2' not in result.solution.served


def test_three_on_two_tracks():
    forced = [('T{}'.format(i), 'fixed', 10, 40) for i in (1, 2, 3)]
    inst = parse_instance(one_track(forced, capacity=2))
    schedules = {tid: TrainSchedule(tid, 'p', (100, 100, 400)) for tid, *_ in forced}
    assert separate_capacity(schedules, inst, 1, inst.period) == [
        ('track', (('T1/load', 0), ('T2/load', 0), ('T3/load', 0)))]
    result = saturate(inst)
    assert result.status == INFEASIBLE_AT_FLOOR
    assert result.solution is None
    assert result.diagnostics


def test_third_identical_train_is_left_out():
    doc = one_track([('T1', 'fixed', 10, 40), ('T2', 'candidate', [10, 10], [40, 40]),
                     ('T3', 'candidate', [10, 10], [40, 40])], capacity=2)
    result = _saturated(parse_instance(doc))
    assert result.status == OPTIMAL
    assert result.solution.served_count == 2
    assert result.statistics.pool_size >= 1


def test_next_period_replica():
    # T1 comes back at 90 minutes; T2 has to leave the track by then
    fits = one_track([('T1', 'fixed', 10, 40), ('T2', 'candidate', [55, 75], [85, 115])], period=80)
    clash = one_track([('T1', 'fixed', 10, 40), ('T2', 'candidate', [60, 75], [90, 115])], period=80)
    inst = parse_instance(clash)
    assert compute_derived(inst).conflict_replicas == 2
    schedules = {'T1': TrainSchedule('T1', 'p', (100, 100, 400)),
                 'T2': TrainSchedule('T2', 'p', (600, 600, 900))}
    assert separate_capacity(schedules, inst, 2, inst.period) == [
        ('track', (('T1/load', 1), ('T2/load', 0)))]
    assert _saturated(inst).solution.objective == 0
    result = _saturated(parse_instance(fits))
    assert result.solution.objective == 1
    assert result.solution.start_times['T2/load'] <= 590


def test_cardinality_cut_stops_the_floor():
    # 41 minutes per train against 0.85 * 120: two trains at most
    doc = one_track([('T1', 'fixed', 0, 40), ('T2', 'fixed', 60, 100), ('T3', 'candidate', [0, 60], [60, 110])],
                    duration=40)
    inst = parse_instance(doc)
    with_cuts = _saturated(inst)
    assert with_cuts.status == OPTIMAL
    assert with_cuts.solution.served == {'T1', 'T2'}
    assert with_cuts.statistics.floors == [2]
    without = _saturated(inst, use_cuts=False)
    assert without.solution.objective == 0
    assert without.statistics.floors == [2, 3]


def _cuts_are_safe(seed, count):
    for inst in random_instances(seed, count):
        try:
            cut = saturate(inst)
        except GraphError:
            continue
        plain = saturate(inst, SolveOptions(use_cuts=False))
        assert cut.status == plain.status
        if cut.solution is not None:
            assert cut.solution.objective == plain.solution.objective


def test_cuts_keep_the_optimum():
    _cuts_are_safe(23, 30)


@pytest.mark.slow
def test_cuts_keep_the_optimum_many():
    _cuts_are_safe(29, 200)


def _moved(schedule, train, where):
    starts = list(schedule.starts)
    if where == 'early arrival':
        starts[0] = train.arrival_window[0] - 1
    elif where == 'late arrival':
        starts[0] = train.arrival_window[1] + 1
    elif where == 'early departure':
        starts[-1] = train.departure_window[0] - 1
    else:
        starts[-1] = train.departure_window[1] + 1
    return TrainSchedule(schedule.train, schedule.plan, tuple(starts))


def test_validator_rejects_moved_starts():
    moves = ['early arrival', 'late arrival', 'early departure', 'late departure']
    rejected = 0
    for inst in random_instances(31, 60):
        try:
            result = saturate(inst)
        except GraphError:
            continue
        if result.solution is None:
            continue
        schedules = result.solution.schedules(inst)
        for tid in sorted(schedules):
            for where in moves:
                moved = dict(schedules)
                moved[tid] = _moved(schedules[tid], inst.train(tid), where)
                verdict, _ = check_solution(moved, inst)
                assert not verdict.ok, (tid, where)
                assert verdict.failed(where.split()[1] + ' window')
                rejected += 1
        if rejected >= 100:
            break
    assert rejected >= 100


def test_plain_problem():
    doc = one_track([('T1', 'fixed', 10, 40), ('T2', 'candidate', [0, 60], [60, 110]),
                     ('T3', 'candidate', [60, 80], [90, 130])], period=None)
    result = _saturated(parse_instance(doc))
    assert result.status == OPTIMAL
    assert result.solution.objective == 2


def test_milp_engine_on_small_yard():
    assert _saturated(scenario(1), engine=MILP).solution.objective == 3


def test_engines_agree():
    for inst in random_instances(11, 12):
        try:
            native = _saturated(inst)
        except GraphError:
            continue
        milp = _saturated(inst, engine=MILP)
        assert native.status == milp.status
        if native.solution is not None:
            assert native.solution.objective == milp.solution.objective


def test_statistics_are_deterministic():
    first = saturate(scenario(2))
    second = saturate(scenario(2))
    assert first.statistics.to_document() == second.statistics.to_document()
    assert first.solution == second.solution


def test_timeout(toy):
    result = saturate(toy, SolveOptions(time_budget=0, engine=MILP))
    assert result.status == TIMEOUT
    assert result.solution is None


def test_unknown_engine(toy):
    graph = build_disjunctive_graph(toy, compute_derived(toy))
    with pytest.raises(ValueError):
        solve_feasibility(graph, ConstraintPool(), 1, SolveOptions(engine='simplex'))


def test_solution_document(toy):
    solution = saturate(toy).solution
    doc = solution.to_document(toy)
    assert doc['served'] == ['T1', 'T2']
    assert doc['trains'][0]['starts'] == {'a': 10, 'load': 10, 'd': 40}
    assert Solution.from_document(doc, toy) == solution


def _random_schedules(rng, inst):
    schedules = {}
    for train in inst.trains:
        plan = train.plans[int(rng.integers(len(train.plans)))]
        start = int(rng.integers(train.arrival_window[0], train.arrival_window[1] + 1))
        starts = [start]
        for oid in plan.sequence[:-1]:
            op = inst.operations[oid]
            starts.append(starts[-1] + op.duration + int(rng.integers(0, (op.max_wait or 0) + 1)))
        if starts[-1] <= train.departure_window[1]:
            schedules[train.id] = TrainSchedule(train.id, plan.id, tuple(starts))
    return schedules


def _separation_matches_folding(seed, count):
    rng = np.random.default_rng(seed)
    for inst in random_instances(seed, count):
        k = compute_derived(inst).conflict_replicas
        schedules = _random_schedules(rng, inst)
        found = separate_capacity(schedules, inst, k, inst.period)
        verdict, _ = check_periodic(schedules, inst)
        assert bool(found) == verdict.failed('capacity')


def test_separation_matches_folding():
    _separation_matches_folding(3, 100)


@pytest.mark.slow
def test_separation_matches_folding_many():
    _separation_matches_folding(5, 500)


def _interval_family(rng):
    """Up to 20 trains on one track, each holding it once, without a period"""
    trains = [('T{:02d}'.format(i), 'candidate', [0, 100], [100, 200]) for i in range(int(rng.integers(1, 21)))]
    doc = one_track(trains, period=None, capacity=int(rng.integers(1, 4)), duration=5, max_wait=None)
    schedules = {}
    for tid, *_ in trains:
        start = int(rng.integers(0, 600))
        schedules[tid] = TrainSchedule(tid, 'p', (start, start, start + int(rng.integers(50, 250))))
    return parse_instance(doc), schedules


def _enumerated_violations(schedules, inst):
    """Every (capacity + 1)-subset sharing a point, and the largest sets doing so"""
    spans = {tid + '/load': (s.starts[1], s.starts[2] + inst.epsilon) for tid, s in schedules.items()}
    size = inst.resource('track').capacity + 1
    subsets = {frozenset(group) for group in combinations(sorted(spans), size)
               if max(spans[n][0] for n in group) < min(spans[n][1] for n in group)}
    at_start = {frozenset(m for m in spans if spans[m][0] <= spans[n][0] < spans[m][1]) for n in spans}
    largest = {c for c in at_start if len(c) >= size and not any(c < other for other in at_start)}
    return subsets, largest


def _separation_is_exact(seed, count):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        inst, schedules = _interval_family(rng)
        size = inst.resource('track').capacity + 1
        subsets, largest = _enumerated_violations(schedules, inst)
        whole = separate_capacity(schedules, inst, 1, None, trim=False)
        cliques = {frozenset(n for n, m in q) for _, q in whole}
        assert len(cliques) == len(whole)
        assert cliques == largest
        assert {frozenset(g) for c in cliques for g in combinations(sorted(c), size)} == subsets
        for resource, q in separate_capacity(schedules, inst, 1, None):
            assert resource == 'track'
            assert all(m == 0 for _, m in q)
            assert frozenset(n for n, _ in q) in subsets


def test_separation_is_exact():
    _separation_is_exact(7, 60)


@pytest.mark.slow
def test_separation_is_exact_many():
    _separation_is_exact(13, 500)
