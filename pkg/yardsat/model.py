#!/usr/bin/env python
"""model.py

Assembles the complete mixed-integer model of a disjunctive graph and solves it
with ``scipy.optimize.milp`` (HiGHS).

Variables, by family:

- ``phi[t]`` -- train t is served
- ``w[t,p]`` -- train t follows plan p
- ``x[u]`` / ``xa[a]`` -- node u / arc a is active
- ``y1[c]``, ``y2[c]`` -- conflict tuple c is resolved with the anchor first / second
- ``z[c]`` -- the two operations of tuple c meet (only when meeting is allowed)
- ``sigma[u]`` -- start time of node u in ticks
- ``g[s,t,p]`` -- occupation of resource s by train t on plan p
- ``rb[c]``, ``ra[c]``, ``rd[c]`` -- before / after / during choice c of an unavailability window
- ``theta`` -- largest average utilization (balance objective only)

Rows carry a tag naming their family so that tests and the MPS name map can
refer to them. The capacity family is lazy: one row per set Q held by the
constraint pool, never the full family.
"""
import logging
import math
from dataclasses import dataclass, replace
import numpy as np
from scipy import sparse
from scipy.optimize import milp, LinearConstraint as ScipyConstraint, Bounds
from .errors import ModelError
from .graph import (ORIGIN, STRICT_FORWARD, STRICT_BACKWARD, ARRIVAL_WINDOW, DEPARTURE_WINDOW,
                    FIX_WINDOW, FIRST, SECOND, MEET, BEFORE, AFTER, DURING)
from .instance import resource_runs, INTERNAL

log = logging.getLogger(__name__)

BINARY = 'binary'
INTEGER = 'integer'
CONTINUOUS = 'continuous'

MAX_SERVED = 'max-served'
FEASIBILITY = 'feasibility'
MIN_MAX_UTILIZATION = 'min-max-utilization'
OBJECTIVES = (MAX_SERVED, FEASIBILITY, MIN_MAX_UTILIZATION)

STRICT_KINDS = (STRICT_FORWARD, STRICT_BACKWARD)
WINDOW_KINDS = (ARRIVAL_WINDOW, DEPARTURE_WINDOW, FIX_WINDOW)
CHOICE_FAMILY = {FIRST: 'y1', SECOND: 'y2', MEET: 'z', BEFORE: 'rb', AFTER: 'ra', DURING: 'rd'}


@dataclass(frozen=True)
class Variable:
    index: int
    family: str
    entity: tuple
    kind: str
    lb: float
    ub: float

    @property
    def name(self):
        return '{}[{}]'.format(self.family, ','.join(str(e) for e in self.entity))


class VariableCatalog:
    """
    Ordered variables, each tied to one graph or instance entity.
    Identical builds give identical indices.
    """

    def __init__(self):
        self.variables = []
        self._lookup = {}

    def __len__(self):
        return len(self.variables)

    def __iter__(self):
        return iter(self.variables)

    def add(self, family, entity, kind=BINARY, lb=0, ub=1):
        key = (family,) + tuple(entity)
        if key in self._lookup:
            raise ModelError('Duplicate variable ' + str(key))
        var = Variable(len(self.variables), family, tuple(entity), kind, lb, ub)
        self.variables.append(var)
        self._lookup[key] = var.index
        return var.index

    def index(self, family, *entity):
        try:
            return self._lookup[(family,) + entity]
        except KeyError:
            raise ModelError('Unknown variable {}{}'.format(family, list(entity)))

    def get(self, family, *entity):
        return self._lookup.get((family,) + entity)


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(coef * var) <sense> rhs``; terms hold each variable once"""
    terms: tuple
    sense: str
    rhs: float
    tag: str


def _row(terms, sense, rhs, tag):
    merged = {}
    for var, coef in terms:
        merged[var] = merged.get(var, 0) + coef
    return LinearConstraint(tuple((v, c) for v, c in merged.items() if c != 0), sense, rhs, tag)


@dataclass(frozen=True)
class ModelInstance:
    """
    An assembled model. ``objective`` maps variable index to coefficient and
    ``sense`` is ``max`` or ``min``.
    """
    catalog: VariableCatalog
    constraints: tuple
    objective: dict
    sense: str
    objective_kind: str
    floor: int = None
    name: str = 'YARDSAT'

    def rows(self, tag):
        return [c for c in self.constraints if c.tag == tag]

    def tag_counts(self):
        counts = {}
        for c in self.constraints:
            counts[c.tag] = counts.get(c.tag, 0) + 1
        return counts


@dataclass(frozen=True)
class CutBounds:
    """
    Right-hand sides of the capacity cuts, all scaled by the utilization cap

    - stay -- train -> minimum stay counted on the tracks (0 if not eligible)
    - stay_rhs -- cap * b * period, or None when no train is eligible
    - cardinality -- bound on the number of served trains, or None
    - occupation_rhs -- resource -> cap * period * capacity, for resources some plan uses
    """
    stay: dict
    stay_rhs: float
    cardinality: int
    occupation_rhs: dict


def cut_bounds(instance, derived):
    """
    Evaluates the capacity cuts of a periodic instance. Returns None without a period.
    """
    if not instance.is_periodic:
        return None
    tau = instance.period
    cap = instance.utilization_cap
    track_ids = set(r.id for r in instance.resources if r.counts_as_track)
    ops = instance.operations
    stay = {}
    for t in instance.trains:
        internal = [o for p in t.plans for o in p.sequence if ops[o].kind == INTERNAL]
        eligible = bool(internal) and all(ops[o].resources & track_ids for o in internal)
        stay[t.id] = derived.min_stay[t.id] if eligible else 0
    b = instance.track_count
    stay_rhs = cap * b * tau if (b > 0 and any(stay.values())) else None

    cardinality = None
    if instance.trains:
        for r in instance.resources:
            lowest = min(derived.min_occupation[(r.id, t.id)] for t in instance.trains)
            if lowest <= 0:
                continue
            bound = math.floor(cap * r.capacity * tau / lowest + 1e-9)
            cardinality = bound if cardinality is None else min(cardinality, bound)

    occupation_rhs = {}
    for r in instance.resources:
        if any(derived.min_occupation_plan[(r.id, t.id, p.id)] > 0 for t in instance.trains for p in t.plans):
            occupation_rhs[r.id] = cap * tau * r.capacity
    return CutBounds(stay, stay_rhs, cardinality, occupation_rhs)


def _pooled_tuples(graph, pool):
    if pool is None:
        return []
    return [graph.tuples[c] for p in pool.pairs for c in graph.pair_tuples.get(p, [])]


def _pool_entries(pool):
    return [] if pool is None else pool.entries()


def _model_arcs(graph, pooled):
    pooled_ids = set(t.id for t in pooled)
    arcs = []
    for a in graph.arcs:
        if a.conflict_tuple is not None:
            if a.conflict_tuple in pooled_ids:
                arcs.append(a)
        else:
            arcs.append(a)
    return arcs


def _box(graph):
    """Variable box of sigma; empty intervals collapse onto their lower bound"""
    box = {}
    for nid, b in graph.bounds.items():
        box[nid] = (b.lb, max(b.lb, b.ub))
    return box


def _utilization_keys(graph, instance, derived):
    if not instance.is_periodic:
        return []
    keys = []
    for r in instance.resources:
        for t in instance.trains:
            for p in t.plans:
                if derived.acquisitions[(r.id, t.id, p.id)] > 0:
                    keys.append((r.id, t.id, p.id))
    return keys


def assemble_model(graph, instance, derived, pool=None, objective=MAX_SERVED, floor=None, use_cuts=True):
    """
    Builds the complete model of a graph restricted to the pooled conflicts

    Parameters:

    - graph -- A :py:class:`~yardsat.graph.DisjunctiveGraph` with bounds
    - instance -- Its instance
    - derived -- Its derived quantities
    - pool -- A :py:class:`~yardsat.solver.ConstraintPool`, or None for an empty pool
    - objective -- ``max-served``, ``feasibility`` or ``min-max-utilization``
    - floor -- Lower bound on the number of served trains (``feasibility`` only)
    - use_cuts -- Add the capacity cuts (periodic instances only)

    Raises :py:class:`~yardsat.errors.ModelError` for pool sets that reference
    unknown nodes, replicas or unpooled pairs, and for a must-serve node with an
    empty time interval.
    """
    if objective not in OBJECTIVES:
        raise ModelError('Unknown objective ' + str(objective))
    if objective == FEASIBILITY and floor is None:
        raise ModelError('The feasibility objective needs a floor')
    if not graph.bounds:
        raise ModelError('Node bounds must be computed before assembly')
    cat = VariableCatalog()
    rows = []
    box = _box(graph)
    pooled = _pooled_tuples(graph, pool)
    arcs = _model_arcs(graph, pooled)
    eps = instance.epsilon

    for t in instance.trains:
        cat.add('phi', (t.id,))
    for t in instance.trains:
        for p in t.plans:
            cat.add('w', (t.id, p.id))
    for nid in graph.nodes:
        cat.add('x', (nid,))
    for a in arcs:
        cat.add('xa', (a.id,))
    for c in pooled:
        cat.add('y1', (c.id,))
        cat.add('y2', (c.id,))
        if graph.pairs[c.pair].meeting:
            cat.add('z', (c.id,))
    for nid in graph.nodes:
        lo, hi = box[nid]
        cat.add('sigma', (nid,), INTEGER, lo, hi)
    util_keys = _utilization_keys(graph, instance, derived)
    for r, tid, pid in util_keys:
        t = instance.train(tid)
        big = (t.departure_window[1] - t.arrival_window[0]) + eps * derived.acquisitions[(r, tid, pid)]
        cat.add('g', (r, tid, pid), CONTINUOUS, 0, big)
    for choice in graph.avail_choices:
        for fam in ('rb', 'ra', 'rd'):
            cat.add(fam, (choice.id,))
    if objective == MIN_MAX_UTILIZATION:
        cat.add('theta', (), CONTINUOUS, 0, math.inf)

    phi = {t.id: cat.index('phi', t.id) for t in instance.trains}
    xv = {nid: cat.index('x', nid) for nid in graph.nodes}
    xa = {a.id: cat.index('xa', a.id) for a in arcs}
    sigma = {nid: cat.index('sigma', nid) for nid in graph.nodes}

    for t in instance.trains:
        if instance.must_serve(t):
            rows.append(_row([(phi[t.id], 1)], '=', 1, 'fixed-trains'))
    for t in instance.trains:
        terms = [(cat.index('w', t.id, p.id), 1) for p in t.plans] + [(phi[t.id], -1)]
        rows.append(_row(terms, '=', 0, 'plan-selection'))

    rows.append(_row([(xv[ORIGIN], 1)], '=', 1, 'node-activation'))
    for nid, node in graph.nodes.items():
        if nid == ORIGIN:
            continue
        terms = [(xv[nid], 1)] + [(cat.index('w', node.owner, p), -1) for p in sorted(node.plans_containing)]
        rows.append(_row(terms, '=', 0, 'node-activation'))
    for nid, b in graph.bounds.items():
        if b.lb > b.ub:
            owner = graph.nodes[nid].owner
            if owner not in graph.unservable and instance.must_serve(instance.train(owner)) and all(
                    nid in graph.plan_paths[(owner, p.id)] for p in instance.train(owner).plans):
                raise ModelError('Node {} of a must-serve train has lb {} > ub {}'.format(nid, b.lb, b.ub))
            rows.append(_row([(xv[nid], 1)], '=', 0, 'unusable-node'))

    for a in arcs:
        if a.kind in STRICT_KINDS:
            terms = [(xa[a.id], 1)] + [(cat.index('w', a.owner, p), -1) for p in sorted(a.plans)]
            rows.append(_row(terms, '=', 0, 'arc-activation'))
        elif a.kind in WINDOW_KINDS:
            rows.append(_row([(xa[a.id], 1), (phi[a.owner], -1)], '=', 0, 'arc-activation'))
        elif a.conflict_tuple is not None:
            choice = cat.index(CHOICE_FAMILY[a.choice], a.conflict_tuple)
            trigger = xa[graph.forward_arc[a.trigger]]
            rows.append(_row([(xa[a.id], 1), (trigger, -1), (choice, -1)], '>=', -1, 'arc-activation'))
        else:
            choice = cat.index(CHOICE_FAMILY[a.choice], a.avail_choice)
            if a.trigger is None:
                rows.append(_row([(xa[a.id], 1), (choice, -1)], '>=', 0, 'arc-activation'))
            else:
                trigger = xa[graph.forward_arc[a.trigger]]
                rows.append(_row([(xa[a.id], 1), (trigger, -1), (choice, -1)], '>=', -1, 'arc-activation'))

    for c in pooled:
        terms = [(cat.index('y1', c.id), 1), (cat.index('y2', c.id), 1),
                 (xv[c.anchor], -1), (xv[c.other], -1)]
        if graph.pairs[c.pair].meeting:
            terms.append((cat.index('z', c.id), 1))
        rows.append(_row(terms, '>=', -1, 'disjunction-selection'))

    for a in arcs:
        big = max(0, box[a.tail][1] - box[a.head][0] + a.length)
        terms = [(sigma[a.head], 1), (sigma[a.tail], -1)]
        if big > 0:
            terms.append((xa[a.id], -big))
        rows.append(_row(terms, '>=', a.length - big, 'precedence'))

    pooled_pairs = set() if pool is None else set(pool.pairs)
    for resource, q in _pool_entries(pool):
        terms = []
        for i, ra in enumerate(q):
            for rb in q[i + 1:]:
                for node, m in (ra, rb):
                    if node not in graph.nodes or not (0 <= m < graph.k):
                        raise ModelError('Pool set on {} references unknown replica {}'.format(resource, (node, m)))
                tid = graph.tuple_for(ra, rb)
                if tid is None or graph.tuples[tid].pair not in pooled_pairs:
                    raise ModelError('Pool set on {} references an unpooled pair {} {}'.format(resource, ra, rb))
                z = cat.get('z', tid)
                if z is not None:
                    terms.append((z, 1))
        rows.append(_row(terms, '<=', math.comb(len(q), 2) - 1, 'capacity'))

    for choice in graph.avail_choices:
        rb, ra, rd = (cat.index(f, choice.id) for f in ('rb', 'ra', 'rd'))
        rows.append(_row([(rb, 1), (ra, 1), (rd, 1), (xv[choice.node], -1)], '=', 0, 'unavailability'))
        lo, hi = choice.bracket
        u = sigma[choice.node]
        upper = max(0, box[choice.node][1] - hi)
        lower = max(0, lo - box[choice.node][0])
        rows.append(_row([(u, 1), (rd, upper)], '<=', hi + upper, 'unavailability-bracket'))
        rows.append(_row([(u, 1), (rd, -lower)], '>=', lo - lower, 'unavailability-bracket'))

    if util_keys:
        ops = instance.operations
        per_resource = {}
        for r, tid, pid in util_keys:
            plan = instance.train(tid).plan(pid)
            g = cat.index('g', r, tid, pid)
            beta = derived.acquisitions[(r, tid, pid)]
            big = cat.variables[g].ub
            terms = [(g, 1), (cat.index('w', tid, pid), -big)]
            for first, last in resource_runs(plan, ops, r):
                terms.append((sigma[graph.node_id(tid, plan.sequence[last + 1])], -1))
                terms.append((sigma[graph.node_id(tid, plan.sequence[first])], 1))
            rows.append(_row(terms, '>=', eps * beta - big, 'utilization'))
            per_resource.setdefault(r, []).append(g)
        for r in sorted(per_resource, key=[res.id for res in instance.resources].index):
            res = instance.resource(r)
            terms = [(g, 1) for g in per_resource[r]]
            rows.append(_row(terms, '<=', instance.utilization_cap * res.capacity * instance.period,
                             'utilization-cap'))
            if objective == MIN_MAX_UTILIZATION:
                rows.append(_row(terms + [(cat.index('theta'), -res.capacity * instance.period)],
                                 '<=', 0, 'balance'))

    if objective == FEASIBILITY:
        rows.append(_row([(phi[t.id], 1) for t in instance.trains], '>=', floor, 'floor'))

    if objective == MIN_MAX_UTILIZATION:
        obj, sense = {cat.index('theta'): 1}, 'min'
    elif objective == MAX_SERVED:
        obj, sense = {phi[t.id]: 1 for t in instance.trains}, 'max'
    else:
        obj, sense = {}, 'max'
    model = ModelInstance(cat, tuple(rows), obj, sense, objective, floor)
    if use_cuts and instance.is_periodic:
        model = add_capacity_cuts(model, instance, derived)
    log.debug('Model: %d variables, %d rows', len(cat), len(model.constraints))
    return model


def add_capacity_cuts(model, instance, derived):
    """
    Returns a copy of ``model`` with the capacity cuts of a periodic instance:
    weighted minimum stays on the tracks, the cardinality bound from the
    smallest occupations, and the per-resource occupation bound over plans.
    """
    bounds = cut_bounds(instance, derived)
    if bounds is None:
        return model
    cat = model.catalog
    rows = list(model.constraints)
    if bounds.stay_rhs is not None:
        terms = [(cat.index('phi', tid), s) for tid, s in bounds.stay.items() if s > 0]
        rows.append(_row(terms, '<=', bounds.stay_rhs, 'capacity-cuts'))
    if bounds.cardinality is not None:
        terms = [(cat.index('phi', t.id), 1) for t in instance.trains]
        rows.append(_row(terms, '<=', bounds.cardinality, 'capacity-cuts'))
    for rid, rhs in bounds.occupation_rhs.items():
        terms = []
        for t in instance.trains:
            for p in t.plans:
                mu = derived.min_occupation_plan[(rid, t.id, p.id)]
                if mu > 0:
                    terms.append((cat.index('w', t.id, p.id), mu))
        rows.append(_row(terms, '<=', rhs, 'capacity-cuts'))
    return replace(model, constraints=tuple(rows))


def expected_size(graph, instance, derived, pool=None, objective=MAX_SERVED, use_cuts=True):
    """
    Variable and row counts of :py:func:`assemble_model`, computed from the
    graph sizes alone. Returns (variables, rows).
    """
    pooled = _pooled_tuples(graph, pool)
    meeting = sum(1 for c in pooled if graph.pairs[c.pair].meeting)
    n_arcs = len(_model_arcs(graph, pooled))
    n_nodes = len(graph.nodes)
    n_trains = len(instance.trains)
    n_plans = sum(len(t.plans) for t in instance.trains)
    n_choices = len(graph.avail_choices)
    n_util = len(_utilization_keys(graph, instance, derived))
    util_resources = len(set(k[0] for k in _utilization_keys(graph, instance, derived)))
    theta = objective == MIN_MAX_UTILIZATION

    variables = (n_trains + n_plans + n_nodes + n_arcs + 2 * len(pooled) + meeting
                 + n_nodes + n_util + 3 * n_choices + (1 if theta else 0))
    rows = (sum(1 for t in instance.trains if instance.must_serve(t)) + n_trains + n_nodes
            + sum(1 for b in graph.bounds.values() if b.lb > b.ub)
            + 2 * n_arcs + len(pooled) + len(_pool_entries(pool)) + 3 * n_choices
            + n_util + util_resources * (2 if theta else 1)
            + (1 if objective == FEASIBILITY else 0))
    if use_cuts and instance.is_periodic:
        bounds = cut_bounds(instance, derived)
        rows += ((bounds.stay_rhs is not None) + (bounds.cardinality is not None)
                 + len(bounds.occupation_rhs))
    return variables, rows


def to_matrices(model):
    """
    Dense cost vector, sparse constraint matrix and bound arrays of a model.
    The cost is for minimization (negated for ``max``).

    Returns (c, A, row_lo, row_hi, var_lo, var_hi, integrality).
    """
    n = len(model.catalog)
    c = np.zeros(n)
    for var, coef in model.objective.items():
        c[var] = coef
    if model.sense == 'max':
        c = -c
    data, ri, ci = [], [], []
    lo = np.empty(len(model.constraints))
    hi = np.empty(len(model.constraints))
    for i, row in enumerate(model.constraints):
        for var, coef in row.terms:
            ri.append(i)
            ci.append(var)
            data.append(coef)
        lo[i] = row.rhs if row.sense in ('>=', '=') else -np.inf
        hi[i] = row.rhs if row.sense in ('<=', '=') else np.inf
    A = sparse.csr_matrix((data, (ri, ci)), shape=(len(model.constraints), n))
    var_lo = np.array([v.lb for v in model.catalog], dtype=float)
    var_hi = np.array([v.ub for v in model.catalog], dtype=float)
    integrality = np.array([0 if v.kind == CONTINUOUS else 1 for v in model.catalog])
    return c, A, lo, hi, var_lo, var_hi, integrality


@dataclass
class ModelResult:
    """
    Outcome of :py:func:`solve_model`: ``optimal``, ``infeasible``, ``timeout``
    (possibly with values) or ``error``. ``objective`` is in the model's own sense.
    """
    status: str
    objective: float = None
    values: np.ndarray = None
    message: str = ''

    def value(self, model, family, *entity):
        return self.values[model.catalog.index(family, *entity)]


def solve_model(model, time_limit=None):
    """
    Solves a model with ``scipy.optimize.milp``

    Parameters:

    - model -- A :py:class:`ModelInstance`
    - time_limit -- Seconds, or None
    """
    c, A, lo, hi, var_lo, var_hi, integrality = to_matrices(model)
    options = {'disp': False}
    if time_limit is not None:
        options['time_limit'] = max(float(time_limit), 0.01)
    constraints = ScipyConstraint(A, lo, hi) if len(model.constraints) else None
    res = milp(c, constraints=constraints, integrality=integrality,
               bounds=Bounds(var_lo, var_hi), options=options)
    if res.status == 0:
        status = 'optimal'
    elif res.status == 1:
        status = 'timeout'
    elif res.status == 2:
        status = 'infeasible'
    else:
        status = 'error'
    objective = None
    if res.x is not None:
        objective = -res.fun if model.sense == 'max' else res.fun
    log.debug('milp: status %s (%s)', status, res.message)
    return ModelResult(status, objective, res.x, res.message)
