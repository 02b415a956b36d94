#!/usr/bin/env python
"""validator.py

Independent checks of schedules against an instance, written straight from the
definitions and never from the disjunctive graph:

- :py:func:`check_single` -- one train follows one of its plans within its windows
- :py:func:`check_periodic` -- capacities hold at every instant once the schedule
  repeats every period, unavailability windows are respected and the average
  utilization stays under the cap
- :py:func:`brute_force_optimum` -- exhaustive search on a time grid, the
  reference the solver is tested against on small instances

An operation occupies its resources from its start until its successor starts,
plus the epsilon release tail. Consecutive operations of one train replica on
one resource count once.
"""
import logging
import math
from dataclasses import dataclass, field
import numpy as np
from .errors import OracleGuardError
from .instance import resource_runs
from .intervals import folded_profile

log = logging.getLogger(__name__)

GUARD_TRAINS = 4
GUARD_PLANS = 2
GUARD_POINTS = 200


@dataclass(frozen=True)
class TrainSchedule:
    """Start ticks of every operation of ``plan`` of a train, in plan order"""
    train: str
    plan: str
    starts: tuple


@dataclass(frozen=True)
class Check:
    check: str
    entity: str
    passed: bool
    detail: str = ''


@dataclass
class Verdict:
    """A list of checks; passes when every check passed"""
    checks: list = field(default_factory=list)

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def add(self, check, entity, passed, detail=''):
        self.checks.append(Check(check, entity, bool(passed), detail))

    def extend(self, other):
        self.checks.extend(other.checks)
        return self

    def failed(self, check):
        return any(c.check == check and not c.passed for c in self.checks)

    def to_document(self):
        return [{'check': c.check, 'entity': c.entity, 'passed': c.passed, 'detail': c.detail}
                for c in self.checks]


@dataclass(frozen=True)
class OccupancyProfile:
    """
    Concurrent use of one resource over the period circle (or the horizon when
    there is no period).

    - segments -- (start, end, count) steps with exact breakpoints
    - occupation -- summed occupation of all trains, one acquisition at a time
    - average -- integral of the profile over capacity * length
    - saturated_fraction -- share of the length spent at full capacity
    """
    resource: str
    capacity: int
    length: int
    segments: tuple
    occupation: int

    @property
    def integral(self):
        return sum((e - s) * c for s, e, c in self.segments)

    @property
    def average(self):
        return self.integral / (self.capacity * self.length) if self.length else 0.0

    @property
    def saturated_fraction(self):
        full = sum(e - s for s, e, c in self.segments if c >= self.capacity)
        return full / self.length if self.length else 0.0

    @property
    def peak(self):
        return max((c for _, _, c in self.segments), default=0)


def schedules_of(solution, instance):
    """Accepts a dict train -> TrainSchedule or anything with ``schedules(instance)``"""
    if isinstance(solution, dict):
        return solution
    return solution.schedules(instance)


def node_intervals(schedule, instance, resource_id):
    """Occupation intervals [start, next start + eps) of the operations using a resource"""
    seq = instance.train(schedule.train).plan(schedule.plan).sequence
    eps = instance.epsilon
    out = []
    for j, oid in enumerate(seq[:-1]):
        if resource_id in instance.operations[oid].resources:
            out.append((schedule.starts[j], schedule.starts[j + 1] + eps, oid))
    return out


def train_intervals(schedule, instance, resource_id):
    """Union of a train replica's occupation intervals on a resource, as disjoint pieces"""
    pieces = []
    for start, end, _ in sorted(node_intervals(schedule, instance, resource_id)):
        if pieces and start <= pieces[-1][1]:
            pieces[-1] = (pieces[-1][0], max(end, pieces[-1][1]))
        else:
            pieces.append((start, end))
    return pieces


def occupation(schedule, instance, resource_id):
    """Occupation counted per acquisition: sum over runs of (release - acquire + eps)"""
    seq = instance.train(schedule.train).plan(schedule.plan).sequence
    total = 0
    for first, last in resource_runs(instance.train(schedule.train).plan(schedule.plan),
                                     instance.operations, resource_id):
        release = schedule.starts[min(last + 1, len(seq) - 1)]
        total += release - schedule.starts[first] + instance.epsilon
    return total


def check_single(schedule, train, instance):
    """
    Checks one train schedule against the train's windows and its plan

    Parameters:

    - schedule -- A :py:class:`TrainSchedule`
    - train -- The :py:class:`~yardsat.instance.TrainService`
    - instance -- The instance

    Returns a :py:class:`Verdict` listing every clause.
    """
    verdict = Verdict()
    try:
        plan = train.plan(schedule.plan)
    except KeyError:
        verdict.add('plan', train.id, False, 'unknown plan ' + str(schedule.plan))
        return verdict
    if len(schedule.starts) != len(plan.sequence):
        verdict.add('plan', train.id, False, 'expected {} start times'.format(len(plan.sequence)))
        return verdict
    starts = schedule.starts
    a_lo, a_hi = train.arrival_window
    q_lo, q_hi = train.departure_window
    verdict.add('arrival window', train.id, a_lo <= starts[0] <= a_hi,
                '{} not in [{}, {}]'.format(starts[0], a_lo, a_hi))
    verdict.add('departure window', train.id, q_lo <= starts[-1] <= q_hi,
                '{} not in [{}, {}]'.format(starts[-1], q_lo, q_hi))
    for j, oid in enumerate(plan.sequence[:-1]):
        op = instance.operations[oid]
        gap = starts[j + 1] - starts[j]
        entity = '{}/{}'.format(train.id, oid)
        verdict.add('minimum completion', entity, gap >= op.duration,
                    'gap {} < duration {}'.format(gap, op.duration))
        if op.max_wait is not None:
            verdict.add('maximum wait', entity, gap <= op.duration + op.max_wait,
                        'gap {} > {}'.format(gap, op.duration + op.max_wait))
    for j, oid in enumerate(plan.sequence):
        if (train.id, oid) in instance.fixings:
            lo, hi = instance.fixings[(train.id, oid)]
            verdict.add('fixing', '{}/{}'.format(train.id, oid), lo <= starts[j] <= hi,
                        '{} not in [{}, {}]'.format(starts[j], lo, hi))
    return verdict


def check_unavailability(schedule, instance):
    """
    Every operation whose working span [start, next start) touches a window of
    one of its resources must follow the suspension pattern: start at least eps
    before the window, still be working eps into it under its duration alone,
    and let its successor start no earlier than duration + window length later.
    """
    verdict = Verdict()
    plan = instance.train(schedule.train).plan(schedule.plan)
    period = instance.period
    eps = instance.epsilon
    for j, oid in enumerate(plan.sequence[:-1]):
        op = instance.operations[oid]
        s, s_next = schedule.starts[j], schedule.starts[j + 1]
        for rid in sorted(op.resources):
            for h, h_end in instance.resource(rid).merged_windows(period):
                if period:
                    shifts = range(math.floor((s - h_end) / period), math.floor((s_next - h) / period) + 1)
                else:
                    shifts = [0]
                for m in shifts:
                    start = h + m * (period or 0)
                    end = h_end + m * (period or 0)
                    if not (start < s_next and end > s):
                        continue
                    suspended = (s + eps <= start and s + op.duration >= start + eps
                                 and s_next >= s + op.duration + (h_end - h))
                    verdict.add('unavailability', '{}/{}@{}'.format(schedule.train, oid, rid), suspended,
                                'works in [{}, {}) against window [{}, {})'.format(s, s_next, start, end))
    return verdict


def _horizon(instance):
    if not instance.trains:
        return 0, 1
    start = min(t.arrival_window[0] for t in instance.trains)
    end = max(t.departure_window[1] for t in instance.trains) + instance.epsilon
    return start, end


def check_periodic(solution, instance, k=None, period=None):
    """
    Checks capacities, unavailability and the utilization cap for a whole solution

    With a period, each train's occupation is folded onto the period circle
    (splitting at the wrap point), which accounts for every replica at once;
    without one, the sweep runs on the line.

    Parameters:

    - solution -- A :py:class:`~yardsat.solver.Solution` or dict train -> :py:class:`TrainSchedule`
    - instance -- The instance
    - k -- Replica count (accepted for symmetry; folding needs no horizon)
    - period -- Period in ticks, defaults to the instance period

    Returns (:py:class:`Verdict`, dict resource id -> :py:class:`OccupancyProfile`).
    """
    schedules = schedules_of(solution, instance)
    period = instance.period if period is None else period
    verdict = Verdict()
    profiles = {}
    origin, horizon_end = _horizon(instance)
    for res in instance.resources:
        intervals = []
        used = 0
        for tid in sorted(schedules):
            sched = schedules[tid]
            for s, e in train_intervals(sched, instance, res.id):
                intervals.append((s, e, tid))
            used += occupation(sched, instance, res.id)
        if period:
            segments = folded_profile(intervals, period)
            length = period
        else:
            shifted = [(s - origin, e - origin, key) for s, e, key in intervals]
            length = max([horizon_end - origin] + [e for _, e, _ in shifted])
            segments = folded_profile(shifted, length)
            segments = tuple((s + origin, e + origin, c) for s, e, c in segments)
        profile = OccupancyProfile(res.id, res.capacity, length, tuple(segments), used)
        profiles[res.id] = profile
        over = [(s, e, c) for s, e, c in segments if c > res.capacity]
        verdict.add('capacity', res.id, not over,
                    'count above {} in {}'.format(res.capacity, over[:3]))
        if period:
            limit = instance.utilization_cap * res.capacity * period
            verdict.add('utilization', res.id, used <= limit + 1e-9,
                        'occupation {} > {:.1f}'.format(used, limit))
    for tid in sorted(schedules):
        verdict.extend(check_unavailability(schedules[tid], instance))
    return verdict, profiles


def check_solution(solution, instance):
    """
    Full check: every fixed and required train served, every served train valid
    on its own, and the whole schedule valid periodically.

    Returns (:py:class:`Verdict`, profiles).
    """
    schedules = schedules_of(solution, instance)
    verdict = Verdict()
    for train in instance.trains:
        if instance.must_serve(train):
            verdict.add('served', train.id, train.id in schedules, 'train must be served')
    for tid in sorted(schedules):
        verdict.extend(check_single(schedules[tid], instance.train(tid), instance))
    periodic, profiles = check_periodic(schedules, instance)
    verdict.extend(periodic)
    return verdict, profiles


@dataclass
class OracleResult:
    """Outcome of :py:func:`brute_force_optimum`. ``objective`` counts served candidates"""
    outcome: str
    objective: int = None
    witness: dict = field(default_factory=dict)


def _enumerate_train(train, instance, grid, horizon):
    """Every grid-aligned schedule of a train that passes the single-train checks"""
    ops = instance.operations
    out = []
    for plan in train.plans:
        seq = plan.sequence
        lo, hi = train.arrival_window
        first = range(-(-lo // grid) * grid, hi + 1, grid)

        def extend(prefix):
            j = len(prefix) - 1
            if j == len(seq) - 1:
                out.append(TrainSchedule(train.id, plan.id, tuple(prefix)))
                return
            op = ops[seq[j]]
            low = prefix[-1] + op.duration
            high = horizon if op.max_wait is None else prefix[-1] + op.duration + op.max_wait
            high = min(high, train.departure_window[1])
            for s in range(-(-low // grid) * grid, high + 1, grid):
                extend(prefix + [s])

        for s in first:
            extend([s])
    valid = []
    for sched in out:
        if check_single(sched, train, instance).ok and check_unavailability(sched, instance).ok:
            valid.append(sched)
    return valid


def brute_force_optimum(instance, grid=1):
    """
    Exhaustive optimum on a time grid, for small instances only

    Every subset of candidates, plan choice and grid-aligned start time is
    covered; schedules of one train with the same footprint are enumerated once.

    Parameters:

    - instance -- At most 4 trains with at most 2 plans each
    - grid -- Grid step in minutes; must equal the instance epsilon and divide every time

    Returns an :py:class:`OracleResult` with outcome ``ok`` or ``fixed-infeasible``.
    Raises :py:class:`~yardsat.errors.OracleGuardError` when the instance is too big.
    """
    g = int(round(grid * 10))
    origin, horizon_end = _horizon(instance)
    length = instance.period if instance.period else horizon_end
    report = {'trains': len(instance.trains),
              'max_plans': max((len(t.plans) for t in instance.trains), default=0),
              'points': length // g if g else None,
              'grid_ticks': g, 'epsilon_ticks': instance.epsilon}
    if (report['trains'] > GUARD_TRAINS or report['max_plans'] > GUARD_PLANS
            or g <= 0 or length // g > GUARD_POINTS or g != instance.epsilon):
        raise OracleGuardError('Instance too large for exhaustive search', report)

    resources = instance.resources
    caps = np.array([r.capacity for r in resources], dtype=np.int64)[:, None]
    cells = -(-length // g)
    horizon = max((t.departure_window[1] for t in instance.trains), default=0)
    limits = [instance.utilization_cap * r.capacity * instance.period if instance.period else math.inf
              for r in resources]

    options = []
    for train in instance.trains:
        seen = {}
        for sched in _enumerate_train(train, instance, g, horizon):
            footprint = np.zeros((len(resources), cells), dtype=np.int64)
            for ri, res in enumerate(resources):
                for s, e in train_intervals(sched, instance, res.id):
                    idx = np.arange(s // g, -(-e // g))
                    if instance.period:
                        np.add.at(footprint[ri], idx % cells, 1)
                    else:
                        footprint[ri, idx] += 1
            used = tuple(occupation(sched, instance, r.id) for r in resources)
            key = footprint.tobytes() + repr(used).encode()
            if key not in seen:
                seen[key] = (sched, footprint, used)
        options.append(list(seen.values()))
        log.debug('Oracle: train %s has %d distinct schedules', train.id, len(seen))

    trains = list(instance.trains)
    order = sorted(range(len(trains)), key=lambda i: (not instance.must_serve(trains[i]), i))
    best = {'objective': None, 'witness': None}
    counts = np.zeros((len(resources), cells), dtype=np.int64)
    util = [0] * len(resources)
    chosen = {}

    def fits(footprint, used):
        if np.any(counts + footprint > caps):
            return False
        return all(u + v <= lim + 1e-9 for u, v, lim in zip(util, used, limits))

    def search(pos, served):
        if pos == len(order):
            if best['objective'] is None or served > best['objective']:
                best['objective'] = served
                best['witness'] = dict(chosen)
            return
        remaining = sum(1 for i in order[pos:] if not trains[i].is_fixed)
        if best['objective'] is not None and served + remaining <= best['objective']:
            return
        train = trains[order[pos]]
        for sched, footprint, used in options[order[pos]]:
            if not fits(footprint, used):
                continue
            counts[:] += footprint
            for ri, v in enumerate(used):
                util[ri] += v
            chosen[train.id] = sched
            search(pos + 1, served + (0 if train.is_fixed else 1))
            del chosen[train.id]
            counts[:] -= footprint
            for ri, v in enumerate(used):
                util[ri] -= v
        if not instance.must_serve(train):
            search(pos + 1, served)

    search(0, 0)
    if best['objective'] is None:
        return OracleResult('fixed-infeasible')
    return OracleResult('ok', best['objective'], best['witness'])
