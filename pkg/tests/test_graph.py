import pytest
from yardsat.errors import GraphError
from yardsat.graph import (build_disjunctive_graph, build_graph, compute_node_bounds, enumerate_conflicts,
                           ORIGIN, STRICT_FORWARD, STRICT_BACKWARD, CONFLICT_PRECEDENCE, CONFLICT_MEETING,
                           LITERAL)
from yardsat.instance import parse_instance, compute_derived
from yardsat.difference import DifferenceSystem
from conftest import one_track, scenario


def _graph(doc, convention='derived'):
    inst = parse_instance(doc)
    return build_disjunctive_graph(inst, compute_derived(inst), convention)


def test_toy_graph(toy):
    graph = build_disjunctive_graph(toy, compute_derived(toy))
    assert len(graph.nodes) == 7
    assert graph.train_nodes['T2'] == ['T2/a', 'T2/load', 'T2/d']
    forward = [a for a in graph.arcs if a.kind == STRICT_FORWARD and a.owner == 'T2']
    assert sorted((a.tail, a.head, a.length) for a in forward) == [('T2/a', 'T2/load', 0),
                                                                  ('T2/load', 'T2/d', 300)]
    backward = [a for a in graph.arcs if a.kind == STRICT_BACKWARD and a.owner == 'T2']
    assert sorted((a.tail, a.head, a.length) for a in backward) == [('T2/d', 'T2/load', -400),
                                                                   ('T2/load', 'T2/a', 0)]
    assert len(graph.pairs) == 1
    assert len(graph.tuples) == 1
    conflict = graph.tuples[0]
    assert not conflict.meeting_arcs
    first = graph.arcs[conflict.precedence_arcs_fwd[0]]
    assert (first.tail, first.head, first.length) == ('T1/d', 'T2/load', 10)
    second = graph.arcs[conflict.precedence_arcs_bwd[0]]
    assert (second.tail, second.head, second.length) == ('T2/d', 'T1/load', 10)
    assert graph.tuple_for(('T1/load', 0), ('T2/load', 0)) == 0
    assert graph.tuple_for(('T2/load', 0), ('T1/load', 0)) == 0


def test_toy_bounds(toy):
    graph = build_disjunctive_graph(toy, compute_derived(toy))
    assert (graph.bounds['T2/load'].lb, graph.bounds['T2/load'].ub) == (200, 600)
    assert (graph.bounds['T2/d'].lb, graph.bounds['T2/d'].ub) == (600, 1000)
    # a departure no earlier than 60 with at most 10 minutes of waiting
    assert graph.bounds['T2/a'].lb == 200
    assert (graph.bounds['T1/load'].lb, graph.bounds['T1/load'].ub) == (100, 100)
    assert graph.bounds[ORIGIN].ub == 0


def test_edge_dump(toy):
    graph = build_disjunctive_graph(toy, compute_derived(toy))
    lines = graph.dump_edges().splitlines()
    assert len(lines) == len(graph.arcs)
    assert lines[0].split()[0] == 'T1/a'


def test_meeting_needs_capacity():
    doc = one_track([('T1', 'fixed', 10, 40), ('T2', 'candidate', [0, 60], [60, 110])], capacity=2)
    graph = _graph(doc)
    conflict = graph.tuples[0]
    assert graph.pairs[0].meeting
    assert sorted(graph.arcs[i].kind for i in conflict.meeting_arcs) == [CONFLICT_MEETING] * 2


def test_replica_tuples_and_convention():
    doc = one_track([('T1', 'fixed', 0, 30), ('T2', 'candidate', [100, 115], [130, 160])])
    derived = _graph(doc)
    literal = _graph(doc, LITERAL)
    assert derived.k == 2
    pair = derived.pair_index('T1/load', 'T2/load')
    by_replica = {derived.tuples[c].replica_index: derived.tuples[c] for c in derived.pair_tuples[pair]
                  if derived.tuples[c].anchor == 'T1/load'}
    assert sorted(by_replica) == [1, 2]
    c = by_replica[2]
    # anchor first against the next period's replica
    assert derived.arcs[c.precedence_arcs_fwd[0]].length == 10 - 1200
    assert literal.arcs[c.precedence_arcs_fwd[0]].length == 10 + 1200
    assert derived.arcs[c.precedence_arcs_bwd[0]].length == 10 + 1200
    assert derived.tuple_for(('T1/load', 0), ('T2/load', 1)) == c.id
    # same-train pairs only exist against later replicas
    own = derived.pair_index('T2/load', 'T2/load')
    assert [derived.tuples[c].replica_index for c in derived.pair_tuples[own]] == [2]


def test_tuple_and_arc_counts():
    doc = one_track([('T1', 'fixed', 0, 30), ('T2', 'candidate', [100, 115], [130, 160])], capacity=2)
    graph = _graph(doc)
    k = graph.k
    assert k == 2
    pair = graph.pair_index('T1/load', 'T2/load')
    tuples = [graph.tuples[c] for c in graph.pair_tuples[pair]]
    assert len(tuples) == 2 * k - 1
    assert sorted((c.anchor, c.replica_index) for c in tuples) == [('T1/load', 1), ('T1/load', 2),
                                                                    ('T2/load', 2)]
    arcs = sum(len(c.precedence_arcs_fwd) + len(c.precedence_arcs_bwd) + len(c.meeting_arcs) for c in tuples)
    successors = len(graph.successors['T1/load']) + len(graph.successors['T2/load'])
    assert arcs == 2 * successors * (2 * k - 1) == 12


def test_plans_share_nodes():
    ops = [{'id': 'a', 'kind': 'arrival'}, {'id': 'd', 'kind': 'departure'}]
    ops += [{'id': 'u{}'.format(i), 'resources': ['track'], 'duration': 5, 'max_wait': 0} for i in range(1, 6)]
    doc = {'period_minutes': 120, 'epsilon_minutes': 1,
           'resources': [{'id': 'track', 'capacity': 1, 'track': True}],
           'operations': ops,
           'trains': {'candidate': [{'id': 'T', 'arrival': [0, 10], 'departure': [30, 90],
                                     'plans': [{'id': 'p1', 'sequence': ['a', 'u1', 'u2', 'u3', 'u5', 'd']},
                                               {'id': 'p2', 'sequence': ['a', 'u1', 'u2', 'u4', 'u5', 'd']}]}]}}
    inst = parse_instance(doc)
    graph = build_graph(inst, compute_derived(inst))
    assert len(graph.train_nodes['T']) == 7
    forward = {(a.tail, a.head): a.plans for a in graph.arcs if a.kind == STRICT_FORWARD}
    assert len(forward) == 7
    assert forward[('T/a', 'T/u1')] == {'p1', 'p2'}
    assert forward[('T/u2', 'T/u3')] == {'p1'}
    assert forward[('T/u4', 'T/u5')] == {'p2'}
    assert graph.successors['T/u2'] == ('T/u3', 'T/u4')
    assert graph.plan_paths[('T', 'p2')] == ('T/a', 'T/u1', 'T/u2', 'T/u4', 'T/u5', 'T/d')


def test_conflicts_skip_distinct_resources():
    doc = one_track([('T1', 'fixed', 10, 40), ('T2', 'candidate', [0, 60], [60, 110])])
    doc['resources'].append({'id': 'crane', 'capacity': 1})
    doc['operations'].append({'id': 'lift', 'resources': ['crane'], 'duration': 20, 'max_wait': 0})
    doc['trains']['candidate'][0]['plans'] = [{'id': 'q', 'sequence': ['a', 'lift', 'd']}]
    inst = parse_instance(doc)
    graph = build_graph(inst, compute_derived(inst))
    compute_node_bounds(graph, inst)
    assert enumerate_conflicts(graph, inst) == []


def test_fixed_train_that_cannot_fit():
    doc = one_track([('T1', 'fixed', 10, 30)])
    with pytest.raises(GraphError):
        _graph(doc)


def test_candidate_that_cannot_fit_is_unservable():
    doc = one_track([('T1', 'fixed', 10, 40), ('T2', 'candidate', [0, 10], [10, 20])])
    graph = _graph(doc)
    assert graph.unservable == {'T2'}


def test_unavailability_choices():
    doc = one_track([('T1', 'fixed', 10, 40), ('T2', 'candidate', [0, 60], [60, 110])],
                    unavailable=[[70, 80]])
    graph = _graph(doc)
    choices = [c for c in graph.avail_choices if c.node == 'T2/load']
    assert len(choices) == 1
    choice = choices[0]
    assert (choice.start, choice.end, choice.period_index) == (700, 800, 1)
    assert choice.bracket == (700 + 10 - 300, 700 - 10)
    before = graph.arcs[choice.before_arcs[0]]
    assert (before.tail, before.head, before.length) == ('T2/d', ORIGIN, -700)
    after = graph.arcs[choice.after_arcs[0]]
    assert (after.tail, after.head, after.length) == (ORIGIN, 'T2/load', 800)
    during = graph.arcs[choice.during_arcs[0]]
    assert (during.tail, during.head, during.length) == ('T2/load', 'T2/d', 400)
    # T1 works in [10, 40): far from the window
    assert not [c for c in graph.avail_choices if c.node == 'T1/load']


def test_interrupted_twice():
    doc = one_track([('T2', 'candidate', [0, 60], [60, 110])], max_wait=None,
                    unavailable=[[40, 45], [50, 55]])
    with pytest.raises(GraphError):
        _graph(doc)


def test_difference_system():
    system = DifferenceSystem({'b': 50})
    system.activate('a')
    system.activate('b')
    assert system.add_arc(ORIGIN, 'a', 10)
    mark = system.mark()
    assert system.add_arc('a', 'b', 30)
    assert system.labels()['b'] == 40
    assert not system.add_arc('b', 'a', -20)
    system.undo(mark)
    assert system.labels() == {ORIGIN: 0, 'a': 10, 'b': float('-inf')}
    assert system.add_arc('a', 'b', 30)
    assert not system.add_arc(ORIGIN, 'a', 25)


def test_scenario_graph_builds():
    inst = scenario(0)
    graph = build_disjunctive_graph(inst, compute_derived(inst))
    assert graph.k == 1
    # C2 works inside the reach stacker night break
    assert [c.node for c in graph.avail_choices] == ['C2/work']
    assert graph.tuples
    assert all(graph.arcs[i].kind == CONFLICT_PRECEDENCE for c in graph.tuples for i in c.precedence_arcs_fwd)
