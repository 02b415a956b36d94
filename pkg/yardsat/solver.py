#!/usr/bin/env python
"""solver.py

Exact saturation by row-and-column generation.

:py:func:`saturate` raises a floor on the number of served trains one step at a
time. Each step is a feasibility question answered by :py:func:`solve_feasibility`:
solve a restricted problem that only knows the conflict pairs generated so far,
read the earliest schedule, look for capacity violations with
:py:func:`separate_capacity`, add the violating sets to the
:py:class:`ConstraintPool` and go on until a schedule without violations
appears or the restricted problem has no solution left.

The default engine is a depth-first search over train, conflict and
unavailability selections. Once a selection is fixed the model is a pure
system of difference constraints, kept solved by
:py:class:`~yardsat.difference.DifferenceSystem`. The search tree is shared by
all generation rounds of a step: a subtree that failed under fewer constraints
stays failed, so a round that finds violations only adds the new conflict
decisions below the current leaf. The ``milp`` engine runs the same loop over
the assembled model with ``scipy.optimize.milp``.
"""
import logging
import time
from dataclasses import dataclass, field
from itertools import combinations
import numpy as np
from scipy.optimize import milp, LinearConstraint, Bounds
from .errors import YardError, ModelError, InstanceError
from .graph import build_disjunctive_graph, ORIGIN, FIRST, SECOND, MEET, BEFORE, AFTER, DURING, DERIVED
from .instance import compute_derived, resource_runs
from .intervals import maximal_cliques, trim_clique
from .difference import DifferenceSystem, NEG
from .validator import TrainSchedule, node_intervals, occupation, schedules_of
from .util import to_minutes, to_ticks
from . import model as milp_model

log = logging.getLogger(__name__)

OPTIMAL = 'optimal'
FEASIBLE = 'feasible'
INFEASIBLE_AT_FLOOR = 'infeasible_at_floor'
TIMEOUT = 'timeout'
NATIVE = 'native'
MILP = 'milp'
SKIP = 'skip'

_FOUND = 'found'
_DEEPER = 'deeper'
_FAILED = 'failed'


class _Timeout(Exception):
    pass


@dataclass(frozen=True)
class SolveOptions:
    """
    Solver knobs

    - time_budget -- Seconds for the whole call, None for no limit
    - use_cuts -- Prune with the capacity cuts (periodic instances)
    - engine -- ``native`` search or ``milp``
    - convention -- Sign convention for periodic conflict arcs
    - max_subsets_per_clique -- Pool sets taken from one violating clique per round
    """
    time_budget: float = None
    use_cuts: bool = True
    engine: str = NATIVE
    convention: str = DERIVED
    max_subsets_per_clique: int = 5


class ConstraintPool:
    """
    Conflict pairs and capacity sets generated so far. Both only grow.

    - pairs -- active conflict pair indices, in the order they were added
    - q_sets -- resource id -> list of sets Q, each a sorted tuple of
      (node, replica offset) references with smallest offset 0
    """

    def __init__(self):
        self.pairs = []
        self.q_sets = {}
        self._pairs = set()
        self._entries = []
        self._seen = set()

    def __len__(self):
        return len(self._entries)

    def has_pair(self, index):
        return index in self._pairs

    def add_pair(self, index):
        if index in self._pairs:
            return False
        self._pairs.add(index)
        self.pairs.append(index)
        return True

    def add_q(self, resource, q):
        q = tuple(q)
        if (resource, q) in self._seen:
            return False
        self._seen.add((resource, q))
        self.q_sets.setdefault(resource, []).append(q)
        self._entries.append((resource, q))
        return True

    def entries(self):
        """(resource, Q) in insertion order"""
        return list(self._entries)


@dataclass
class SelectionState:
    """
    Decisions of the search: train -> plan id or ``skip``; conflict tuple ->
    first / second / meet; unavailability choice -> before / after / during.
    Missing keys are undecided.
    """
    train: dict = field(default_factory=dict)
    tuple: dict = field(default_factory=dict)
    avail: dict = field(default_factory=dict)


@dataclass
class Solution:
    """
    Served trains, their plans and the start tick of every active node.
    ``objective`` counts the served candidates.
    """
    served: frozenset
    plan_choice: dict
    start_times: dict
    objective: int

    def schedules(self, instance):
        out = {}
        for tid in sorted(self.served):
            plan = instance.train(tid).plan(self.plan_choice[tid])
            starts = []
            for oid in plan.sequence:
                nid = tid + '/' + oid
                if nid not in self.start_times:
                    raise YardError('Active node {} has no start time'.format(nid))
                starts.append(self.start_times[nid])
            out[tid] = TrainSchedule(tid, plan.id, tuple(starts))
        return out

    @property
    def served_count(self):
        return len(self.served)

    @classmethod
    def from_schedules(cls, schedules, instance):
        starts = {}
        for tid, sched in schedules.items():
            seq = instance.train(tid).plan(sched.plan).sequence
            for oid, s in zip(seq, sched.starts):
                starts[tid + '/' + oid] = s
        served = frozenset(schedules)
        objective = sum(1 for tid in served if not instance.train(tid).is_fixed)
        return cls(served, {tid: s.plan for tid, s in schedules.items()}, starts, objective)

    def to_document(self, instance):
        schedules = self.schedules(instance)
        trains = []
        for t in instance.trains:
            if t.id not in schedules:
                continue
            sched = schedules[t.id]
            seq = t.plan(sched.plan).sequence
            trains.append({'id': t.id,
                           'status': t.status,
                           'plan': sched.plan,
                           'starts': {oid: to_minutes(s) for oid, s in zip(seq, sched.starts)}})
        return {'objective': self.objective,
                'served': [t['id'] for t in trains],
                'trains': trains}

    @classmethod
    def from_document(cls, document, instance):
        """
        Reads a solution document. Raises :py:class:`~yardsat.errors.InstanceError`
        for unknown trains, plans or operations.
        """
        schedules = {}
        for i, entry in enumerate(document.get('trains') or []):
            path = 'trains[{}]'.format(i)
            try:
                train = instance.train(str(entry['id']))
                plan = train.plan(str(entry['plan']))
            except KeyError as err:
                raise InstanceError(str(err), path)
            starts = entry.get('starts') or {}
            missing = [o for o in plan.sequence if o not in starts]
            if missing:
                raise InstanceError('no start time for ' + ', '.join(missing), path + '.starts')
            schedules[train.id] = TrainSchedule(train.id, plan.id, tuple(
                to_ticks(starts[o], '{}.starts.{}'.format(path, o)) for o in plan.sequence))
        return cls.from_schedules(schedules, instance)


@dataclass
class SolveStatistics:
    """Counters of one solve. Everything except ``wall_time`` is deterministic"""
    rounds: int = 0
    separations: int = 0
    pool_size: int = 0
    active_pairs: int = 0
    node_expansions: int = 0
    floors: list = field(default_factory=list)
    incumbents: list = field(default_factory=list)
    wall_time: float = 0.0

    def to_document(self):
        return {'rounds': self.rounds,
                'separations': self.separations,
                'pool_size': self.pool_size,
                'active_pairs': self.active_pairs,
                'node_expansions': self.node_expansions,
                'floors': list(self.floors),
                'incumbents': list(self.incumbents)}


@dataclass
class SolveResult:
    """
    Outcome of a solve: status ``optimal``, ``feasible`` (heuristic, not
    certified), ``infeasible_at_floor`` or ``timeout``; the best solution found
    (None if there is none) and the statistics.
    """
    status: str
    solution: Solution = None
    statistics: SolveStatistics = field(default_factory=SolveStatistics)
    heuristic: bool = False
    diagnostics: list = field(default_factory=list)

    def to_document(self, instance):
        doc = {'status': self.status, 'heuristic': self.heuristic}
        if self.solution is not None:
            doc.update(self.solution.to_document(instance))
        doc['statistics'] = self.statistics.to_document()
        if self.diagnostics:
            doc['diagnostics'] = list(self.diagnostics)
        return doc


def separate_capacity(solution, instance, k, period, trim=True, limit=5):
    """
    Finds capacity violations of a schedule

    Occupation intervals of every served train are copied to ``k`` consecutive
    periods on the line; intervals of one train replica on one resource are
    merged so that a replica counts once. Every maximal clique of the interval
    graph larger than the capacity yields a set Q of (node, replica offset)
    references: for each replica in the clique, the node working at the
    clique's common point. Sets are shifted so their smallest offset is 0.

    Parameters:

    - solution -- A :py:class:`Solution` or dict train -> schedule
    - instance -- The instance
    - k -- Number of replicas laid on the line (1 without a period)
    - period -- Period in ticks, or None
    - trim -- Cut each clique down to capacity + 1 members (see
      :py:func:`~yardsat.intervals.trim_clique`); otherwise return the whole clique
    - limit -- Sets kept per clique when trimming

    Returns a list of (resource id, Q), in resource order and without duplicates.
    """
    schedules = schedules_of(solution, instance)
    replicas = k if period else 1
    found = []
    seen = set()
    for res in instance.resources:
        pieces = []
        for tid in sorted(schedules):
            merged = []
            for s, e, oid in sorted(node_intervals(schedules[tid], instance, res.id)):
                nid = tid + '/' + oid
                if merged and s <= merged[-1][1]:
                    merged[-1][1] = max(merged[-1][1], e)
                    merged[-1][2].append((s, e, nid))
                else:
                    merged.append([s, e, [(s, e, nid)]])
            for m in range(replicas):
                shift = m * (period or 0)
                for s, e, members in merged:
                    pieces.append((s + shift, e + shift, (m, shift, members)))
        intervals = [(s, e, i) for i, (s, e, _) in enumerate(pieces)]
        for clique in maximal_cliques(intervals):
            if len(clique) <= res.capacity:
                continue
            point = max(pieces[i][0] for i in clique)
            members = []
            for i in clique:
                m, shift, nodes = pieces[i][2]
                for s, e, nid in nodes:
                    if s + shift <= point < e + shift:
                        members.append((s + shift, e + shift, (nid, m)))
                        break
            subsets = trim_clique(members, res.capacity + 1, limit) if trim else [[r for _, _, r in members]]
            for subset in subsets:
                low = min(m for _, m in subset)
                q = tuple(sorted((n, m - low) for n, m in subset))
                if (res.id, q) not in seen:
                    seen.add((res.id, q))
                    found.append((res.id, q))
    return found


class _Frame:
    __slots__ = ('decision', 'values', 'next', 'mark', 'applied')

    def __init__(self, decision, values):
        self.decision = decision
        self.values = values
        self.next = 0
        self.mark = None
        self.applied = None


class _Search:
    """Depth-first search for one floor, sharing the pool with earlier floors"""

    def __init__(self, graph, pool, floor, options, stats, deadline):
        inst = graph.instance
        self.graph = graph
        self.instance = inst
        self.pool = pool
        self.floor = floor
        self.options = options
        self.stats = stats
        self.deadline = deadline
        self.state = SelectionState()
        upper = {n: b.ub for n, b in graph.bounds.items() if n != ORIGIN}
        self.system = DifferenceSystem(upper)
        self.active_next = {}
        self.served = 0
        self.solution = None
        self.periodic = inst.is_periodic
        self.sign = -1 if graph.convention != DERIVED else 1

        def width(t):
            return (t.arrival_window[1] - t.arrival_window[0]) + (t.departure_window[1] - t.departure_window[0])
        self.order = sorted(inst.trains, key=lambda t: (not inst.must_serve(t), width(t)))

        self.train_arcs = {}
        for a in graph.arcs:
            if a.conflict_tuple is not None or a.avail_choice is not None or a.owner is None:
                continue
            train = inst.train(a.owner)
            for p in train.plans:
                if not a.plans or p.id in a.plans:
                    self.train_arcs.setdefault((train.id, p.id), []).append(a)

        lb = {n: b.lb for n, b in graph.bounds.items()}
        self.tuple_order = sorted(graph.tuples, key=lambda c: (min(lb[c.anchor], lb[c.other]),
                                                              c.replica_index, c.id))
        self.q_by_tuple = {}
        for _, q in pool.entries():
            self._register(q)

        self.cuts = None
        self.stay_used = 0
        self.occupation_used = {}
        self.contributions = {}
        if options.use_cuts and self.periodic:
            self.cuts = milp_model.cut_bounds(inst, graph.derived)
            self.occupation_used = {r: 0 for r in self.cuts.occupation_rhs}

    def _register(self, q):
        tids = tuple(self.graph.tuple_for(a, b) for a, b in combinations(q, 2))
        if any(t is None for t in tids):
            raise YardError('Capacity set {} has a pair without a conflict tuple'.format(q))
        for t in tids:
            self.q_by_tuple.setdefault(t, []).append(tids)
        return tids

    def _tick(self):
        self.stats.node_expansions += 1
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _Timeout()

    def _next_decision(self):
        n = len(self.state.train)
        if n < len(self.order):
            return ('train', self.order[n])
        for c in self.tuple_order:
            if (c.id not in self.state.tuple and self.pool.has_pair(c.pair)
                    and c.anchor in self.system and c.other in self.system):
                return ('tuple', c)
        for choice in self.graph.avail_choices:
            if choice.node in self.system and choice.id not in self.state.avail:
                return ('avail', choice)
        return None

    def _values(self, decision):
        kind, item = decision
        if kind == 'train':
            if item.id in self.graph.unservable:
                return [SKIP]
            values = [p.id for p in item.plans]
            if not self.instance.must_serve(item):
                values.append(SKIP)
            return values
        dist = self.system.dist
        if kind == 'tuple':
            shift = self.sign * (item.replica_index - 1) * (self.instance.period or 0)
            if dist[item.anchor] <= dist[item.other] + shift:
                values = [FIRST, SECOND]
            else:
                values = [SECOND, FIRST]
            if self.graph.pairs[item.pair].meeting:
                values.append(MEET)
            return values
        if dist[item.node] != NEG and dist[item.node] >= item.end:
            return [AFTER, BEFORE, DURING]
        return [BEFORE, AFTER, DURING]

    def _trigger_active(self, arc):
        return arc.trigger is None or self.active_next.get(arc.trigger[0]) == arc.trigger[1]

    def _add(self, arc):
        return self.system.add_arc(arc.tail, arc.head, arc.length)

    def _apply(self, decision, value):
        kind, item = decision
        graph = self.graph
        if kind == 'train':
            self.state.train[item.id] = value
            if value == SKIP:
                remaining = len(self.order) - len(self.state.train)
                return self.served + remaining >= self.floor
            self.served += 1
            path = graph.plan_paths[(item.id, value)]
            for a, b in zip(path, path[1:]):
                self.active_next[a] = b
            if self.cuts is not None and not self._within_cuts(item, value):
                return False
            for nid in path:
                self.system.activate(nid)
            return all(self._add(a) for a in self.train_arcs.get((item.id, value), []))
        if kind == 'tuple':
            self.state.tuple[item.id] = value
            if value == MEET:
                for q in self.q_by_tuple.get(item.id, []):
                    if all(self.state.tuple.get(t) == MEET for t in q):
                        return False
                ids = item.meeting_arcs
            else:
                ids = item.precedence_arcs_fwd if value == FIRST else item.precedence_arcs_bwd
            arcs = [graph.arcs[i] for i in ids]
            return all(self._add(a) for a in arcs if self._trigger_active(a))
        self.state.avail[item.id] = value
        ids = {BEFORE: item.before_arcs, AFTER: item.after_arcs, DURING: item.during_arcs}[value]
        arcs = [graph.arcs[i] for i in ids]
        if not all(self._add(a) for a in arcs if self._trigger_active(a)):
            return False
        if value == DURING:
            lo, hi = item.bracket
            return (self.system.add_arc(ORIGIN, item.node, lo)
                    and self.system.add_arc(item.node, ORIGIN, -hi))
        return True

    def _within_cuts(self, train, plan_id):
        cuts = self.cuts
        derived = self.graph.derived
        stay = cuts.stay.get(train.id, 0)
        occ = {r: derived.min_occupation_plan[(r, train.id, plan_id)] for r in cuts.occupation_rhs}
        self.contributions[train.id] = (stay, occ)
        self.stay_used += stay
        for r, v in occ.items():
            self.occupation_used[r] += v
        if cuts.cardinality is not None and self.served > cuts.cardinality:
            return False
        if cuts.stay_rhs is not None and self.stay_used > cuts.stay_rhs + 1e-9:
            return False
        return all(self.occupation_used[r] <= rhs + 1e-9 for r, rhs in cuts.occupation_rhs.items())

    def _retract(self, decision, value):
        kind, item = decision
        if kind == 'train':
            del self.state.train[item.id]
            if value == SKIP:
                return
            self.served -= 1
            path = self.graph.plan_paths[(item.id, value)]
            for a in path[:-1]:
                self.active_next.pop(a, None)
            if item.id in self.contributions:
                stay, occ = self.contributions.pop(item.id)
                self.stay_used -= stay
                for r, v in occ.items():
                    self.occupation_used[r] -= v
        elif kind == 'tuple':
            del self.state.tuple[item.id]
        else:
            del self.state.avail[item.id]

    def _advance(self, stack):
        while stack:
            frame = stack[-1]
            if frame.applied is not None:
                self._retract(frame.decision, frame.applied)
                self.system.undo(frame.mark)
                frame.applied = None
            while frame.next < len(frame.values):
                value = frame.values[frame.next]
                frame.next += 1
                frame.mark = self.system.mark()
                if self._apply(frame.decision, value):
                    frame.applied = value
                    return True
                self._retract(frame.decision, value)
                self.system.undo(frame.mark)
            stack.pop()
        return False

    def _current_solution(self, sigma):
        plans = {tid: p for tid, p in self.state.train.items() if p != SKIP}
        starts = {}
        for tid, p in plans.items():
            for nid in self.graph.plan_paths[(tid, p)]:
                starts[nid] = int(sigma[nid])
        objective = sum(1 for tid in plans if not self.instance.train(tid).is_fixed)
        return Solution(frozenset(plans), plans, starts, objective)

    def _over_utilization(self, solution):
        inst = self.instance
        schedules = solution.schedules(inst)
        for res in inst.resources:
            used = sum(occupation(s, inst, res.id) for s in schedules.values())
            if used > inst.utilization_cap * res.capacity * inst.period + 1e-9:
                return True
        return False

    def _repair_utilization(self):
        """Start times meeting the active arcs and the utilization cap, or None"""
        inst = self.instance
        graph = self.graph
        nodes = list(self.system.dist)
        index = {n: i for i, n in enumerate(nodes)}
        rows, lo, hi = [], [], []
        for tail in nodes:
            for head, length in self.system.out.get(tail, ()):
                if head in index:
                    row = np.zeros(len(nodes))
                    row[index[head]] += 1
                    row[index[tail]] -= 1
                    rows.append(row)
                    lo.append(length)
                    hi.append(np.inf)
        for res in inst.resources:
            row = np.zeros(len(nodes))
            fixed = 0
            for tid, pid in self.state.train.items():
                if pid == SKIP:
                    continue
                plan = inst.train(tid).plan(pid)
                for first, last in resource_runs(plan, inst.operations, res.id):
                    row[index[graph.node_id(tid, plan.sequence[last + 1])]] += 1
                    row[index[graph.node_id(tid, plan.sequence[first])]] -= 1
                    fixed += inst.epsilon
            if np.any(row):
                rows.append(row)
                lo.append(-np.inf)
                hi.append(inst.utilization_cap * res.capacity * inst.period - fixed)
        var_lo = np.array([graph.bounds[n].lb for n in nodes], dtype=float)
        var_hi = np.array([max(graph.bounds[n].lb, graph.bounds[n].ub) for n in nodes], dtype=float)
        res = milp(np.ones(len(nodes)), constraints=LinearConstraint(np.array(rows), lo, hi),
                   integrality=np.ones(len(nodes)), bounds=Bounds(var_lo, var_hi),
                   options={'disp': False})
        if res.x is None:
            return None
        return {n: int(round(res.x[i])) for n, i in index.items()}

    def _leaf(self):
        inst = self.instance
        solution = self._current_solution(self.system.dist)
        if self.periodic and self._over_utilization(solution):
            sigma = self._repair_utilization()
            if sigma is None:
                return _FAILED
            solution = self._current_solution(sigma)
        self.stats.separations += 1
        found = separate_capacity(solution, inst, self.graph.k, inst.period,
                                  limit=self.options.max_subsets_per_clique)
        if not found:
            self.solution = solution
            return _FOUND
        self.stats.rounds += 1
        grew = False
        violated = False
        for resource, q in found:
            for a, b in combinations(q, 2):
                pair = self.graph.tuples[self.graph.tuple_for(a, b)].pair
                grew = self.pool.add_pair(pair) or grew
            if self.pool.add_q(resource, q):
                tids = self._register(q)
            else:
                tids = tuple(self.graph.tuple_for(a, b) for a, b in combinations(q, 2))
            if all(self.state.tuple.get(t) == MEET for t in tids):
                violated = True
        log.debug('Round %d: %d violating sets, pool %d, pairs %d', self.stats.rounds, len(found),
                  len(self.pool), len(self.pool.pairs))
        if violated or not grew:
            return _FAILED
        return _DEEPER

    def run(self):
        stack = []
        while True:
            self._tick()
            decision = self._next_decision()
            if decision is not None:
                stack.append(_Frame(decision, self._values(decision)))
                if not self._advance(stack):
                    return None
                continue
            outcome = self._leaf()
            if outcome == _FOUND:
                return self.solution
            if outcome == _DEEPER:
                continue
            if not self._advance(stack):
                return None


def solution_from_model(model, result, graph):
    """Reads served trains, plans and start times off a solved model"""
    inst = graph.instance
    plans = {}
    for t in inst.trains:
        if result.value(model, 'phi', t.id) > 0.5:
            plans[t.id] = max(t.plans, key=lambda p: result.value(model, 'w', t.id, p.id)).id
    starts = {}
    for tid, pid in plans.items():
        for nid in graph.plan_paths[(tid, pid)]:
            starts[nid] = int(round(result.value(model, 'sigma', nid)))
    objective = sum(1 for tid in plans if not inst.train(tid).is_fixed)
    return Solution(frozenset(plans), plans, starts, objective)


def solve_restricted(graph, pool, objective, floor=None, options=None, statistics=None, deadline=None):
    """
    Row-and-column generation over the assembled model: solve with
    ``scipy.optimize.milp``, separate, grow the pool, repeat.

    Parameters:

    - graph -- The disjunctive graph
    - pool -- A :py:class:`ConstraintPool`, grown in place
    - objective -- A :py:mod:`~yardsat.model` objective name
    - floor -- Floor for the ``feasibility`` objective
    - options -- :py:class:`SolveOptions`
    - statistics -- :py:class:`SolveStatistics` to update
    - deadline -- ``time.monotonic()`` value to stop at

    Returns (Solution or None when infeasible, objective value).
    """
    options = options or SolveOptions()
    stats = statistics if statistics is not None else SolveStatistics()
    inst = graph.instance
    while True:
        model = milp_model.assemble_model(graph, inst, graph.derived, pool, objective, floor,
                                          use_cuts=options.use_cuts)
        limit = None
        if deadline is not None:
            limit = deadline - time.monotonic()
            if limit <= 0:
                raise _Timeout()
        result = milp_model.solve_model(model, limit)
        if result.status == 'infeasible':
            return None, None
        if result.values is None:
            if result.status == 'timeout':
                raise _Timeout()
            raise ModelError('milp failed: ' + result.message)
        if result.status == 'timeout':
            raise _Timeout()
        solution = solution_from_model(model, result, graph)
        stats.separations += 1
        found = separate_capacity(solution, inst, graph.k, inst.period,
                                  limit=options.max_subsets_per_clique)
        if not found:
            return solution, result.objective
        stats.rounds += 1
        grew = False
        for resource, q in found:
            for a, b in combinations(q, 2):
                tid = graph.tuple_for(a, b)
                if tid is None:
                    raise YardError('Capacity set {} has a pair without a conflict tuple'.format(q))
                grew = pool.add_pair(graph.tuples[tid].pair) or grew
            grew = pool.add_q(resource, q) or grew
        if not grew:
            raise ModelError('Separation returned only pooled sets; the model solution is inconsistent')


def solve_feasibility(graph, pool, floor, options=None, statistics=None, deadline=None):
    """
    Finds a schedule serving at least ``floor`` trains (fixed and required
    trains always included), or returns None when there is none.

    Parameters:

    - graph -- The disjunctive graph
    - pool -- A :py:class:`ConstraintPool`, grown in place
    - floor -- Minimum number of served trains
    - options -- :py:class:`SolveOptions`
    - statistics -- :py:class:`SolveStatistics` to update
    - deadline -- ``time.monotonic()`` value to stop at
    """
    options = options or SolveOptions()
    stats = statistics if statistics is not None else SolveStatistics()
    stats.floors.append(floor)
    if options.engine == MILP:
        solution, _ = solve_restricted(graph, pool, milp_model.FEASIBILITY, floor, options, stats, deadline)
    elif options.engine == NATIVE:
        solution = _Search(graph, pool, floor, options, stats, deadline).run()
    else:
        raise ValueError('Unknown engine: ' + str(options.engine))
    stats.pool_size = len(pool)
    stats.active_pairs = len(pool.pairs)
    return solution


def saturate(instance, options=None, graph=None):
    """
    Maximizes the number of served candidate trains

    The floor starts at the number of trains that must be served and rises to
    one more than the best solution found until a floor has no solution, every
    train is served or a capacity cut caps the count. Each improving solution
    is logged as an incumbent.

    Parameters:

    - instance -- A valid :py:class:`~yardsat.instance.Instance`
    - options -- :py:class:`SolveOptions`
    - graph -- Prebuilt graph of ``instance``, built here if None

    Returns a :py:class:`SolveResult`.
    """
    options = options or SolveOptions()
    start = time.monotonic()
    deadline = start + options.time_budget if options.time_budget is not None else None
    if graph is None:
        graph = build_disjunctive_graph(instance, compute_derived(instance), options.convention)
    pool = ConstraintPool()
    stats = SolveStatistics()
    must = sum(1 for t in instance.trains if instance.must_serve(t))
    ceiling = len(instance.trains)
    if options.use_cuts and instance.is_periodic:
        cuts = milp_model.cut_bounds(instance, graph.derived)
        if cuts.cardinality is not None:
            ceiling = min(ceiling, cuts.cardinality)
    incumbent = None
    status = OPTIMAL
    diagnostics = []
    try:
        incumbent = solve_feasibility(graph, pool, must, options, stats, deadline)
        if incumbent is None:
            diagnostics.append('the {} trains that must be served cannot be scheduled together'.format(must))
            status = INFEASIBLE_AT_FLOOR
        else:
            stats.incumbents.append(incumbent.objective)
            log.info('Incumbent: %d trains (%d candidates)', incumbent.served_count, incumbent.objective)
            while incumbent.served_count < ceiling:
                better = solve_feasibility(graph, pool, incumbent.served_count + 1, options, stats, deadline)
                if better is None:
                    break
                incumbent = better
                stats.incumbents.append(incumbent.objective)
                log.info('Incumbent: %d trains (%d candidates)', incumbent.served_count, incumbent.objective)
    except _Timeout:
        status = TIMEOUT
        diagnostics.append('time budget of {} s exhausted'.format(options.time_budget))
        log.warning('Time budget exhausted')
    stats.pool_size = len(pool)
    stats.active_pairs = len(pool.pairs)
    stats.wall_time = time.monotonic() - start
    return SolveResult(status, incumbent, stats, diagnostics=diagnostics)
