#!/usr/bin/env python
"""graph.py

Contains the :py:class:`DisjunctiveGraph` and the functions that build it.

Every timing rule of an instance becomes an arc ``(tail, head, length)``
meaning ``sigma(head) >= sigma(tail) + length`` once the arc is active:

- strict arcs along each train's plans (forward ``lambda``, backward
  ``-(lambda + gamma)``), merged into one DAG per train so that plans sharing
  operations share nodes
- arrival and departure window arcs through the origin ``o``
- conflict arcs, grouped in tuples: for a conflicting pair {u, v} and a
  replica index i, the choice between "u before v^i", "v^i before u" and, when
  some shared resource has capacity above one, "u and v^i meet"
- unavailability arcs: for each operation using a resource with windows, and
  each window replica it may touch, the choice between finishing before the
  window, starting after it, or being suspended across it
"""
import logging
import math
from dataclasses import dataclass, field
import networkx as nx
from .errors import GraphError
from .instance import ARRIVAL, DEPARTURE

log = logging.getLogger(__name__)

ORIGIN = 'o'
STRICT_FORWARD = 'strict-forward'
STRICT_BACKWARD = 'strict-backward'
ARRIVAL_WINDOW = 'arrival-window'
DEPARTURE_WINDOW = 'departure-window'
FIX_WINDOW = 'fix-window'
CONFLICT_PRECEDENCE = 'conflict-precedence'
CONFLICT_MEETING = 'conflict-meeting'
AVAIL_BEFORE = 'avail-before'
AVAIL_AFTER = 'avail-after'
AVAIL_DURING = 'avail-during'

FIRST = 'first'
SECOND = 'second'
MEET = 'meet'
BEFORE = 'before'
AFTER = 'after'
DURING = 'during'

DERIVED = 'derived'
LITERAL = 'literal'


@dataclass(frozen=True)
class Node:
    """A graph node: the origin, or one operation of one train (shared by all plans using it)"""
    id: str
    owner: str = None
    operation: str = None
    plans_containing: frozenset = frozenset()
    index: int = 0


@dataclass(frozen=True)
class Arc:
    """
    A difference constraint ``sigma(head) >= sigma(tail) + length``

    - plans -- plan ids activating a strict arc
    - owner -- train whose service activates a window arc
    - conflict_tuple -- tuple id for conflict arcs
    - choice -- decision value activating a conflict or unavailability arc
    - trigger -- (node, successor) strict edge that must be active too
    - avail_period -- replica index of the window for unavailability arcs
    - avail_choice -- id of the unavailability choice the arc belongs to
    """
    id: int
    tail: str
    head: str
    length: int
    kind: str
    plans: frozenset = frozenset()
    owner: str = None
    conflict_tuple: int = None
    choice: str = None
    trigger: tuple = None
    avail_period: int = None
    avail_choice: int = None


@dataclass(frozen=True)
class ConflictPair:
    """Two nodes (possibly the same one) sharing at least one resource"""
    u: str
    v: str
    shared_resources: frozenset
    meeting: bool = False
    same_train: bool = False


@dataclass(frozen=True)
class ConflictTuple:
    """
    One decidable disjunction between ``anchor`` and replica ``replica_index``
    of ``other``. ``precedence_arcs_fwd`` encode the anchor going first,
    ``precedence_arcs_bwd`` the replica going first.
    """
    id: int
    pair: int
    anchored: str
    anchor: str
    other: str
    replica_index: int
    precedence_arcs_fwd: tuple
    precedence_arcs_bwd: tuple
    meeting_arcs: tuple


@dataclass(frozen=True)
class NodeBounds:
    lb: int
    ub: int


@dataclass(frozen=True)
class AvailChoice:
    """
    The before/after/during decision of one node against one window replica.
    ``bracket`` is the (lo, hi) start interval the during pattern needs.
    """
    id: int
    node: str
    resource: str
    start: int
    end: int
    period_index: int
    before_arcs: tuple
    after_arcs: tuple
    during_arcs: tuple
    bracket: tuple


class DisjunctiveGraph:
    """
    The disjunctive graph of an instance. Build it with :py:func:`build_disjunctive_graph`
    (or step by step with :py:func:`build_graph`, :py:func:`enumerate_conflicts`,
    :py:func:`build_conflict_tuples` and :py:func:`build_unavailability_arcs`).

    Constructor parameters:

    - instance -- The :py:class:`~yardsat.instance.Instance`
    - derived -- Its :py:class:`~yardsat.instance.DerivedQuantities`
    - convention -- ``derived`` or ``literal`` sign convention for periodic conflict arcs
    """

    def __init__(self, instance, derived, convention=DERIVED):
        if convention not in (DERIVED, LITERAL):
            raise ValueError('Unknown convention: ' + str(convention))
        self.instance = instance
        self.derived = derived
        self.convention = convention
        self.k = derived.conflict_replicas
        self.nodes = {ORIGIN: Node(ORIGIN)}
        self.arcs = []
        self.successors = {ORIGIN: ()}
        self.train_nodes = {}
        self.plan_paths = {}
        self.forward_arc = {}
        self.bounds = {}
        self.pairs = []
        self.tuples = []
        self.pair_tuples = {}
        self.avail_choices = []
        self.node_choices = {}
        self.unservable = set()
        self._pair_index = {}
        self._tuple_lookup = {}

    def node_id(self, train_id, operation_id):
        return train_id + '/' + operation_id

    def add_arc(self, tail, head, length, kind, **kwargs):
        arc = Arc(len(self.arcs), tail, head, int(length), kind, **kwargs)
        self.arcs.append(arc)
        return arc.id

    def resources_of(self, node_id):
        node = self.nodes[node_id]
        if node.operation is None:
            return frozenset()
        return self.instance.operations[node.operation].resources

    def pair_index(self, u, v):
        """Index of the conflict pair {u, v}, or None"""
        return self._pair_index.get(_pair_key(self.nodes[u], self.nodes[v]))

    def attach_conflicts(self, pairs, tuples, arcs):
        """Stores pairs, tuples and their arcs produced by :py:func:`build_conflict_tuples`"""
        offset = len(self.arcs)
        if arcs and arcs[0].id != offset:
            raise GraphError('conflict arcs must be numbered from the current arc count')
        self.arcs.extend(arcs)
        self.pairs = list(pairs)
        self.tuples = list(tuples)
        self._pair_index = {_pair_key(self.nodes[p.u], self.nodes[p.v]): i for i, p in enumerate(self.pairs)}
        self.pair_tuples = {}
        self._tuple_lookup = {}
        for t in self.tuples:
            self.pair_tuples.setdefault(t.pair, []).append(t.id)
            self._tuple_lookup[(t.anchor, t.other, t.replica_index)] = t.id

    def tuple_for(self, a, b):
        """
        The tuple deciding between two replica references (node, replica offset),
        or None if the pair generates no such tuple.
        """
        (na, ma), (nb, mb) = a, b
        if mb < ma:
            (na, ma), (nb, mb) = (nb, mb), (na, ma)
        index = mb - ma + 1
        if self.convention == LITERAL:
            anchor, other = nb, na
        else:
            anchor, other = na, nb
        if index == 1:
            pair = self.pairs[self.pair_index(na, nb)]
            anchor, other = pair.u, pair.v
        return self._tuple_lookup.get((anchor, other, index))

    def dump_edges(self):
        """Edge list, one ``tail head length kind`` line per arc, for debugging"""
        lines = []
        for a in self.arcs:
            lines.append('{} {} {} {}'.format(a.tail, a.head, a.length, a.kind))
        return '\n'.join(lines) + '\n'


def _pair_key(a, b):
    return (a.id, b.id) if a.index <= b.index else (b.id, a.id)


def _train_dag(train, operations):
    """networkx DAG over the operation ids of all the train's plans"""
    dag = nx.DiGraph()
    first_seen = {}
    for plan in train.plans:
        if len(set(plan.sequence)) != len(plan.sequence):
            raise GraphError('Plan {} of train {} repeats an operation'.format(plan.id, train.id))
        for oid in plan.sequence:
            first_seen.setdefault(oid, len(first_seen))
            dag.add_node(oid)
        for a, b in zip(plan.sequence, plan.sequence[1:]):
            dag.add_edge(a, b)
    if not nx.is_directed_acyclic_graph(dag):
        raise GraphError('Plans of train {} cannot be merged into an acyclic graph'.format(train.id))
    arrivals = set(p.sequence[0] for p in train.plans)
    departures = set(p.sequence[-1] for p in train.plans)
    if len(arrivals) != 1 or len(departures) != 1:
        raise GraphError('Plans of train {} must share their arrival and departure'.format(train.id))
    order = list(nx.lexicographical_topological_sort(dag, key=lambda o: first_seen[o]))
    return dag, order


def build_graph(instance, derived, convention=DERIVED):
    """
    Builds the nodes and strict arcs of every train, with window arcs and successor sets

    Parameters:

    - instance -- A valid instance
    - derived -- Its derived quantities
    - convention -- Sign convention stored for later conflict construction

    Raises :py:class:`~yardsat.errors.GraphError` for trains without plans or whose
    plans cannot be merged into an acyclic graph.
    """
    graph = DisjunctiveGraph(instance, derived, convention)
    ops = instance.operations
    for train in instance.trains:
        if not train.plans:
            raise GraphError('Train {} has no plans'.format(train.id))
        dag, order = _train_dag(train, ops)
        ids = []
        for oid in order:
            nid = graph.node_id(train.id, oid)
            containing = frozenset(p.id for p in train.plans if oid in p.sequence)
            graph.nodes[nid] = Node(nid, train.id, oid, containing, len(graph.nodes))
            ids.append(nid)
        graph.train_nodes[train.id] = ids
        for p in train.plans:
            graph.plan_paths[(train.id, p.id)] = tuple(graph.node_id(train.id, o) for o in p.sequence)
        for oid in order:
            nid = graph.node_id(train.id, oid)
            graph.successors[nid] = tuple(graph.node_id(train.id, s)
                                          for s in order if dag.has_edge(oid, s))
        for oid in order:
            op = ops[oid]
            tail = graph.node_id(train.id, oid)
            for succ in order:
                if not dag.has_edge(oid, succ):
                    continue
                head = graph.node_id(train.id, succ)
                plans = frozenset(p.id for p in train.plans
                                  if any(a == oid and b == succ for a, b in zip(p.sequence, p.sequence[1:])))
                graph.forward_arc[(tail, head)] = graph.add_arc(tail, head, op.duration, STRICT_FORWARD,
                                                                plans=plans, owner=train.id)
                if op.max_wait is not None:
                    graph.add_arc(head, tail, -(op.duration + op.max_wait), STRICT_BACKWARD,
                                  plans=plans, owner=train.id, trigger=(tail, head))
        arrival = graph.node_id(train.id, order[0])
        departure = graph.node_id(train.id, order[-1])
        a_lo, a_hi = train.arrival_window
        q_lo, q_hi = train.departure_window
        graph.add_arc(ORIGIN, arrival, a_lo, ARRIVAL_WINDOW, owner=train.id)
        graph.add_arc(arrival, ORIGIN, -a_hi, ARRIVAL_WINDOW, owner=train.id)
        graph.add_arc(ORIGIN, departure, q_lo, DEPARTURE_WINDOW, owner=train.id)
        graph.add_arc(departure, ORIGIN, -q_hi, DEPARTURE_WINDOW, owner=train.id)
        for oid in order:
            if (train.id, oid) in instance.fixings:
                lo, hi = instance.fixings[(train.id, oid)]
                nid = graph.node_id(train.id, oid)
                graph.add_arc(ORIGIN, nid, lo, FIX_WINDOW, owner=train.id)
                graph.add_arc(nid, ORIGIN, -hi, FIX_WINDOW, owner=train.id)
    log.debug('Strict graph: %d nodes, %d arcs', len(graph.nodes), len(graph.arcs))
    return graph


def compute_node_bounds(graph, instance):
    """
    Per-node [lb, ub] time bounds, tightened by propagating durations and
    maximum waits along the plan DAGs and clipped to the train's windows.

    Parameters:

    - graph -- A graph from :py:func:`build_graph`
    - instance -- The instance it was built from

    Returns a dict node id -> :py:class:`NodeBounds`; also stores it on the graph.
    Raises :py:class:`~yardsat.errors.GraphError` when a node that every plan of a
    fixed (or required) train uses has an empty interval.
    """
    ops = instance.operations
    bounds = {ORIGIN: NodeBounds(0, 0)}
    for train in instance.trains:
        ids = graph.train_nodes[train.id]
        lb = {n: train.arrival_window[0] for n in ids}
        ub = {n: train.departure_window[1] for n in ids}
        lb[ids[0]], ub[ids[0]] = train.arrival_window
        lb[ids[-1]], ub[ids[-1]] = train.departure_window
        for n in ids:
            oid = graph.nodes[n].operation
            if (train.id, oid) in instance.fixings:
                lo, hi = instance.fixings[(train.id, oid)]
                lb[n], ub[n] = max(lb[n], lo), min(ub[n], hi)
        preds = {n: [] for n in ids}
        for n in ids:
            for s in graph.successors[n]:
                preds[s].append(n)
        for _ in range(2 * len(ids) + 2):
            changed = False
            for n in ids:
                op = ops[graph.nodes[n].operation]
                if preds[n]:
                    new = min(lb[p] + ops[graph.nodes[p].operation].duration for p in preds[n])
                    if new > lb[n]:
                        lb[n], changed = new, True
                    waits = [ops[graph.nodes[p].operation].max_wait for p in preds[n]]
                    if all(w is not None for w in waits):
                        new = max(ub[p] + ops[graph.nodes[p].operation].duration + w
                                  for p, w in zip(preds[n], waits))
                        if new < ub[n]:
                            ub[n], changed = new, True
                succs = graph.successors[n]
                if succs:
                    new = max(ub[s] - op.duration for s in succs)
                    if new < ub[n]:
                        ub[n], changed = new, True
                    if op.max_wait is not None:
                        new = min(lb[s] - op.duration - op.max_wait for s in succs)
                        if new > lb[n]:
                            lb[n], changed = new, True
            if not changed:
                break
        every_plan = set.intersection(*[set(graph.plan_paths[(train.id, p.id)]) for p in train.plans])
        for n in ids:
            if lb[n] > ub[n]:
                if instance.must_serve(train) and n in every_plan:
                    raise GraphError('Train {} cannot be scheduled: node {} has lb {} > ub {}'.format(
                        train.id, n, lb[n], ub[n]))
                if n in every_plan:
                    graph.unservable.add(train.id)
            bounds[n] = NodeBounds(lb[n], ub[n])
    graph.bounds = bounds
    return bounds


def enumerate_conflicts(graph, instance):
    """
    All unordered node pairs whose operations share a resource, including pairs
    inside one train (and a node with itself) when replicas of the train can meet.

    Parameters:

    - graph -- The graph
    - instance -- The instance

    Returns a list of :py:class:`ConflictPair`, in node order.
    """
    caps = {r.id: r.capacity for r in instance.resources}
    nodes = [n for n in graph.nodes.values() if n.operation is not None and graph.resources_of(n.id)]
    pairs = []
    for i, a in enumerate(nodes):
        ra = graph.resources_of(a.id)
        for b in nodes[i:]:
            shared = ra & graph.resources_of(b.id)
            if not shared:
                continue
            same = a.owner == b.owner
            if same:
                if graph.k < 2:
                    continue
                if a.id != b.id and not (a.plans_containing & b.plans_containing):
                    continue
            meeting = any(caps[s] > 1 for s in shared)
            pairs.append(ConflictPair(a.id, b.id, frozenset(shared), meeting, same))
    log.debug('%d conflict pairs', len(pairs))
    return pairs


def build_conflict_tuples(pairs, k, period, epsilon, successors, convention=DERIVED, first_arc_id=0):
    """
    Builds the tuples of every conflict pair and their arcs

    For a tuple anchored at u against replica i of v, with D = (i - 1) * period:

    - u before v^i: arcs (u', v) of length eps - D, one per successor u' of u
    - v^i before u: arcs (v', u) of length eps + D
    - u meets v^i: arcs (u, v') of length -eps - D and (v, u') of length -eps + D

    The ``literal`` convention flips the sign of D.

    Parameters:

    - pairs -- List of :py:class:`ConflictPair`
    - k -- Replica horizon
    - period -- Period in ticks (unused when k is 1)
    - epsilon -- epsilon in ticks
    - successors -- dict node -> tuple of successor nodes
    - convention -- ``derived`` or ``literal``
    - first_arc_id -- id given to the first arc produced

    Returns (tuples, arcs).
    """
    if k < 1:
        raise ValueError('k must be at least 1')
    sign = -1 if convention == LITERAL else 1
    tuples = []
    arcs = []

    def arc(tail, head, length, kind, tid, choice, trigger):
        arcs.append(Arc(first_arc_id + len(arcs), tail, head, length, kind,
                        conflict_tuple=tid, choice=choice, trigger=trigger))
        return arcs[-1].id

    for pindex, pair in enumerate(pairs):
        specs = []
        if pair.same_train:
            specs += [('u', pair.u, pair.v, i) for i in range(2, k + 1)]
            if pair.u != pair.v:
                specs += [('v', pair.v, pair.u, i) for i in range(2, k + 1)]
        else:
            specs += [('u', pair.u, pair.v, i) for i in range(1, k + 1)]
            specs += [('v', pair.v, pair.u, i) for i in range(2, k + 1)]
        for anchored, a, b, i in specs:
            tid = len(tuples)
            shift = sign * (i - 1) * (period or 0)
            fwd = tuple(arc(a2, b, epsilon - shift, CONFLICT_PRECEDENCE, tid, FIRST, (a, a2))
                        for a2 in successors[a])
            bwd = tuple(arc(b2, a, epsilon + shift, CONFLICT_PRECEDENCE, tid, SECOND, (b, b2))
                        for b2 in successors[b])
            meet = ()
            if pair.meeting:
                meet = tuple(arc(a, b2, -epsilon - shift, CONFLICT_MEETING, tid, MEET, (b, b2))
                             for b2 in successors[b])
                meet += tuple(arc(b, a2, -epsilon + shift, CONFLICT_MEETING, tid, MEET, (a, a2))
                              for a2 in successors[a])
            tuples.append(ConflictTuple(tid, pindex, anchored, a, b, i, fwd, bwd, meet))
    return tuples, arcs


def _window_gaps(windows, period):
    if len(windows) < 2:
        return period - (windows[0][1] - windows[0][0]) if (windows and period) else math.inf
    gaps = [b[0] - a[1] for a, b in zip(windows, windows[1:])]
    if period:
        gaps.append(windows[0][0] + period - windows[-1][1])
    return min(gaps)


def build_unavailability_arcs(graph, instance, k=None):
    """
    Adds the before/after/during choices of every node that uses a resource
    with unavailability windows, for each window replica its time span can touch.

    For a window [h, h') shifted by (i - 1) periods and a node u with successors v:

    - before: arcs (v, o) of length -h
    - after: arc (o, u) of length h'
    - during: arcs (u, v) of length lambda_u + (h' - h), and u must start at
      least eps before h while lambda_u alone would carry it eps past h

    Parameters:

    - graph -- Graph with bounds computed
    - instance -- The instance
    - k -- Replica horizon; informative only, replicas follow from the node bounds

    Raises :py:class:`~yardsat.errors.GraphError` if an operation could be interrupted
    twice within its own occupation.
    """
    if not graph.bounds:
        compute_node_bounds(graph, instance)
    period = instance.period
    eps = instance.epsilon
    added = []
    for nid, node in graph.nodes.items():
        if node.operation is None or not graph.successors[nid]:
            continue
        op = instance.operations[node.operation]
        for rid in sorted(op.resources):
            windows = instance.resource(rid).merged_windows(period)
            if not windows:
                continue
            lb = graph.bounds[nid].lb
            span_end = max(graph.bounds[s].ub for s in graph.successors[nid])
            longest = span_end - lb
            if op.max_wait is not None:
                longest = min(longest, op.duration + op.max_wait)
            if longest > _window_gaps(windows, period):
                raise GraphError('Operation {} of {} may be interrupted twice by {} windows'.format(
                    node.operation, node.owner, rid))
            for h, h_end in windows:
                if period:
                    shifts = range(math.floor((lb - h_end) / period), math.floor((span_end - h) / period) + 1)
                else:
                    shifts = [0]
                for m in shifts:
                    start = h + m * (period or 0)
                    end = h_end + m * (period or 0)
                    if not (start < span_end and end > lb):
                        continue
                    cid = len(graph.avail_choices)
                    before = tuple(graph.add_arc(s, ORIGIN, -start, AVAIL_BEFORE, avail_period=m + 1,
                                                 avail_choice=cid, choice=BEFORE, trigger=(nid, s))
                                   for s in graph.successors[nid])
                    after = (graph.add_arc(ORIGIN, nid, end, AVAIL_AFTER, avail_period=m + 1,
                                           avail_choice=cid, choice=AFTER),)
                    during = tuple(graph.add_arc(nid, s, op.duration + (h_end - h), AVAIL_DURING,
                                                 avail_period=m + 1, avail_choice=cid, choice=DURING,
                                                 trigger=(nid, s))
                                   for s in graph.successors[nid])
                    bracket = (start + eps - op.duration, start - eps)
                    choice = AvailChoice(cid, nid, rid, start, end, m + 1, before, after, during, bracket)
                    graph.avail_choices.append(choice)
                    graph.node_choices.setdefault(nid, []).append(cid)
                    added.append(choice)
    log.debug('%d unavailability choices', len(added))
    return added


def build_disjunctive_graph(instance, derived, convention=DERIVED):
    """
    Builds the complete graph: strict part, bounds, conflict tuples and
    unavailability choices

    Parameters:

    - instance -- A valid instance
    - derived -- Its derived quantities
    - convention -- ``derived`` (default) or ``literal``
    """
    graph = build_graph(instance, derived, convention)
    compute_node_bounds(graph, instance)
    pairs = enumerate_conflicts(graph, instance)
    tuples, arcs = build_conflict_tuples(pairs, graph.k, instance.period, instance.epsilon,
                                         graph.successors, convention, len(graph.arcs))
    graph.attach_conflicts(pairs, tuples, arcs)
    build_unavailability_arcs(graph, instance, graph.k)
    return graph
