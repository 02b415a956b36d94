#!/usr/bin/env python
"""instance.py

Domain types for yards, operations, plans and train services, plus ingestion
of instance documents and the derived quantities (makespan, replica count,
minimum stays and minimum occupations) used by every other module.

An instance document is YAML with the top-level keys ``resources``,
``operations``, ``trains`` (split into ``fixed`` and ``candidate``),
``period_minutes``, ``epsilon_minutes`` and ``utilization_cap``. Optional keys
are ``name``, ``plans`` (a catalog of plan sequences that trains refer to by id),
``scenario`` (reporting metadata) and ``timetable`` (weekly services expanded
day by day into fixed trains, see :py:func:`expand_weekly`).
"""
import copy
import logging
import math
from dataclasses import dataclass, field, replace
from .errors import InstanceError
from .util import to_ticks, to_minutes, ensure_document, digest, Day_map, MINUTES_PER_DAY, TICKS_PER_MINUTE

log = logging.getLogger(__name__)

ARRIVAL = 'arrival'
DEPARTURE = 'departure'
INTERNAL = 'internal'
FIXED = 'fixed'
CANDIDATE = 'candidate'
DEFAULT_EPSILON = 1
DEFAULT_CAP = 0.85


@dataclass(frozen=True)
class UnavailabilityWindow:
    """A period-relative interval [start, end) in ticks during which a resource cannot work"""
    start: int
    end: int


@dataclass(frozen=True)
class Resource:
    """
    A yard resource (track group, crane, reach-stacker fleet...)

    Constructor parameters:

    - id -- Identifier
    - capacity -- How many train replicas may use it at once
    - counts_as_track -- Whether the capacity contributes to the track count b
    - unavailability_windows -- Tuple of :py:class:`UnavailabilityWindow`
    """
    id: str
    capacity: int
    counts_as_track: bool = False
    unavailability_windows: tuple = ()

    def merged_windows(self, period):
        """
        Windows as (h, h') tick pairs, re-joining the two pieces of a window
        that crosses the period boundary so that h' may exceed the period.
        """
        windows = sorted((w.start, w.end) for w in self.unavailability_windows)
        if period and len(windows) > 1 and windows[0][0] == 0 and windows[-1][1] == period:
            head = windows.pop(0)
            last = windows.pop()
            windows.append((last[0], period + head[1]))
        return windows


@dataclass(frozen=True)
class Operation:
    """An entry of the operation catalog. ``max_wait`` is None when unbounded"""
    id: str
    kind: str
    resources: frozenset = frozenset()
    duration: int = 0
    max_wait: int = 0


@dataclass(frozen=True)
class Plan:
    """An ordered sequence of operation ids from an arrival to a departure"""
    id: str
    sequence: tuple


@dataclass(frozen=True)
class TrainService:
    """
    A train service with its alternative plans and its time windows

    Constructor parameters:

    - id -- Identifier
    - status -- ``fixed`` (already in the timetable) or ``candidate``
    - plans -- Tuple of :py:class:`Plan`
    - arrival_window -- (earliest, latest) arrival in ticks
    - departure_window -- (earliest, latest) departure in ticks
    """
    id: str
    status: str
    plans: tuple
    arrival_window: tuple
    departure_window: tuple

    @property
    def is_fixed(self):
        return self.status == FIXED

    def plan(self, plan_id):
        for p in self.plans:
            if p.id == plan_id:
                return p
        raise KeyError('Train ' + self.id + ' has no plan ' + str(plan_id))


@dataclass(frozen=True)
class Instance:
    """
    A complete saturation instance. Build it with :py:func:`parse_instance`.

    ``period`` is None for the plain (non periodic) problem. ``fixings`` maps
    (train id, operation id) to a (lo, hi) tick interval the operation must
    start in, and ``required`` lists candidate trains that must be served;
    both are produced by :py:func:`yardsat.heuristic.fix_with_tolerance`.
    """
    resources: tuple
    operations: dict
    trains: tuple
    period: int = None
    epsilon: int = DEFAULT_EPSILON
    utilization_cap: float = DEFAULT_CAP
    name: str = ''
    scenario: dict = field(default_factory=dict)
    fixings: dict = field(default_factory=dict)
    required: frozenset = frozenset()
    digest: str = ''

    @property
    def is_periodic(self):
        return self.period is not None

    @property
    def track_count(self):
        return sum(r.capacity for r in self.resources if r.counts_as_track)

    @property
    def fixed_trains(self):
        return [t for t in self.trains if t.is_fixed]

    @property
    def candidate_trains(self):
        return [t for t in self.trains if not t.is_fixed]

    def resource(self, resource_id):
        for r in self.resources:
            if r.id == resource_id:
                return r
        raise KeyError('Unknown resource ' + str(resource_id))

    def train(self, train_id):
        for t in self.trains:
            if t.id == train_id:
                return t
        raise KeyError('Unknown train ' + str(train_id))

    def must_serve(self, train):
        return train.is_fixed or train.id in self.required

    def with_overrides(self, epsilon=None, utilization_cap=None):
        """
        Returns a copy with epsilon (minutes) and/or the utilization cap replaced,
        re-checking the invariants they take part in.
        """
        changes = {}
        if epsilon is not None:
            changes['epsilon'] = to_ticks(epsilon, 'epsilon')
        if utilization_cap is not None:
            changes['utilization_cap'] = float(utilization_cap)
        inst = replace(self, **changes)
        _check_policy(inst)
        return inst


@dataclass(frozen=True)
class DerivedQuantities:
    """
    Quantities derived once from an instance

    - makespan -- span between the earliest arrival and the latest departure
    - replica_count -- ceil(makespan / period), 1 without a period
    - conflict_replicas -- replica horizon used for conflicts; one more than
      replica_count when the release tail of the last operation crosses into
      the next period
    - min_stay -- train id -> latest arrival to earliest departure
    - min_occupation_plan -- (resource, train, plan) -> minimum occupation
    - min_occupation -- (resource, train) -> minimum over the train's plans
    - acquisitions -- (resource, train, plan) -> number of separate runs of
      consecutive operations using the resource
    """
    makespan: int
    replica_count: int
    conflict_replicas: int
    min_stay: dict
    min_occupation_plan: dict
    min_occupation: dict
    acquisitions: dict


def _require(mapping, key, path):
    if not isinstance(mapping, dict) or key not in mapping:
        raise InstanceError('missing field ' + repr(key), path)
    return mapping[key]


def _window(value, path):
    """Either a single time or a [lo, hi] pair"""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise InstanceError('expected [earliest, latest]', path)
        return (to_ticks(value[0], path), to_ticks(value[1], path))
    tick = to_ticks(value, path)
    return (tick, tick)


def _parse_unavailability(entries, period, path):
    windows = []
    for i, entry in enumerate(entries or []):
        wpath = '{}[{}]'.format(path, i)
        if isinstance(entry, dict):
            start, end = _require(entry, 'start', wpath), _require(entry, 'end', wpath)
        elif isinstance(entry, (list, tuple)) and len(entry) == 2:
            start, end = entry
        else:
            raise InstanceError('expected [start, end]', wpath)
        h, h_end = to_ticks(start, wpath), to_ticks(end, wpath)
        if period is not None:
            if not (0 <= h < period) or not (0 < h_end <= period):
                raise InstanceError('window outside the period', wpath)
            if h_end < h:
                # Crosses midnight of the period: store both pieces
                windows.append(UnavailabilityWindow(h, period))
                if h_end > 0:
                    windows.append(UnavailabilityWindow(0, h_end))
                continue
        if h_end <= h:
            raise InstanceError('empty or inverted unavailability window', wpath)
        windows.append(UnavailabilityWindow(h, h_end))
    windows.sort(key=lambda w: w.start)
    for a, b in zip(windows, windows[1:]):
        if b.start < a.end:
            raise InstanceError('overlapping unavailability windows', path)
    return tuple(windows)


def _parse_resources(entries):
    resources = []
    seen = set()
    for i, entry in enumerate(entries or []):
        path = 'resources[{}]'.format(i)
        rid = str(_require(entry, 'id', path))
        if rid in seen:
            raise InstanceError('duplicate resource id ' + rid, path)
        seen.add(rid)
        capacity = _require(entry, 'capacity', path)
        if not isinstance(capacity, int) or isinstance(capacity, bool) or capacity < 1:
            raise InstanceError('capacity must be a positive integer', path + '.capacity')
        resources.append((rid, capacity, bool(entry.get('track', False)),
                          entry.get('unavailable', []), path))
    return resources


def _parse_operations(entries, resource_ids):
    operations = {}
    for i, entry in enumerate(entries or []):
        path = 'operations[{}]'.format(i)
        oid = str(_require(entry, 'id', path))
        if oid in operations:
            raise InstanceError('duplicate operation id ' + oid, path)
        kind = entry.get('kind', INTERNAL)
        if kind not in (ARRIVAL, DEPARTURE, INTERNAL):
            raise InstanceError('unknown kind ' + repr(kind), path + '.kind')
        uses = entry.get('resources', []) or []
        for r in uses:
            if r not in resource_ids:
                raise InstanceError('unknown resource ' + repr(r), path + '.resources')
        if kind != INTERNAL:
            if uses or entry.get('duration', 0) or entry.get('max_wait', 0):
                raise InstanceError(kind + ' operations take no resources and no time', path)
            operations[oid] = Operation(oid, kind)
            continue
        duration = to_ticks(_require(entry, 'duration', path), path + '.duration')
        max_wait = entry.get('max_wait')
        max_wait = None if max_wait is None else to_ticks(max_wait, path + '.max_wait')
        if duration < 0 or (max_wait is not None and max_wait < 0):
            raise InstanceError('negative duration or wait', path)
        operations[oid] = Operation(oid, kind, frozenset(uses), duration, max_wait)
    return operations


def _parse_plan(entry, catalog, operations, path):
    if isinstance(entry, str):
        if entry not in catalog:
            raise InstanceError('unknown plan ' + repr(entry), path)
        pid, sequence = entry, catalog[entry]
    else:
        pid = str(_require(entry, 'id', path))
        sequence = _require(entry, 'sequence', path)
    sequence = tuple(str(s) for s in sequence)
    if len(sequence) < 2:
        raise InstanceError('a plan needs at least an arrival and a departure', path)
    for j, oid in enumerate(sequence):
        if oid not in operations:
            raise InstanceError('unknown operation ' + repr(oid), '{}.sequence[{}]'.format(path, j))
    kinds = [operations[o].kind for o in sequence]
    if kinds[0] != ARRIVAL or kinds[-1] != DEPARTURE:
        raise InstanceError('plan must start with an arrival and end with a departure', path)
    if any(k != INTERNAL for k in kinds[1:-1]):
        raise InstanceError('arrival/departure operations only at the plan ends', path)
    return Plan(pid, sequence)


def _parse_train(entry, status, catalog, operations, path):
    tid = str(_require(entry, 'id', path))
    arrival = _window(_require(entry, 'arrival', path), path + '.arrival')
    departure = _window(_require(entry, 'departure', path), path + '.departure')
    if status == FIXED and (arrival[0] != arrival[1] or departure[0] != departure[1]):
        raise InstanceError('fixed train with a non-degenerate window', path)
    if not (arrival[0] <= arrival[1] <= departure[0] <= departure[1]):
        raise InstanceError('window inversion (need a <= a_bar <= q <= q_bar)', path)
    plans_doc = _require(entry, 'plans', path)
    if not plans_doc:
        raise InstanceError('train has no plans', path + '.plans')
    plans = tuple(_parse_plan(p, catalog, operations, '{}.plans[{}]'.format(path, j))
                  for j, p in enumerate(plans_doc))
    if len(set(p.id for p in plans)) != len(plans):
        raise InstanceError('duplicate plan id', path + '.plans')
    return TrainService(tid, status, plans, arrival, departure)


def _check_policy(instance):
    if instance.epsilon <= 0:
        raise InstanceError('epsilon must be positive', 'epsilon_minutes')
    positive = [o.duration for o in instance.operations.values() if o.duration > 0]
    if positive and instance.epsilon >= min(positive):
        raise InstanceError('epsilon must be below the smallest positive duration', 'epsilon_minutes')
    if not (0 < instance.utilization_cap <= 1):
        raise InstanceError('utilization cap must be in (0, 1]', 'utilization_cap')


def expand_weekly(document):
    """
    Expands a ``timetable`` block of weekly services into fixed trains

    Each service lists the days it runs (``Mon`` .. ``Sun``), an ``arrival``
    clock time, a ``dwell_minutes`` and the ``plans`` it may follow. Every
    (service, day) becomes one fixed train ``<service>-<day>`` offset by the
    day. Returns a new document; the input is left untouched.

    Parameters:

    - document -- Parsed instance document containing a ``timetable`` key
    """
    document = copy.deepcopy(document)
    timetable = document.pop('timetable')
    trains = document.setdefault('trains', {})
    fixed = trains.setdefault('fixed', []) or []
    trains['fixed'] = fixed
    default_plans = timetable.get('plans', [])
    for i, service in enumerate(timetable.get('services', [])):
        path = 'timetable.services[{}]'.format(i)
        sid = str(_require(service, 'id', path))
        clock = to_ticks(_require(service, 'arrival', path), path + '.arrival')
        dwell = to_ticks(_require(service, 'dwell_minutes', path), path + '.dwell_minutes')
        for day in _require(service, 'days', path):
            if day not in Day_map:
                raise InstanceError('unknown day ' + repr(day), path + '.days')
            arrival = Day_map[day] * MINUTES_PER_DAY * TICKS_PER_MINUTE + clock
            fixed.append({'id': '{}-{}'.format(sid, day),
                          'arrival': to_minutes(arrival),
                          'departure': to_minutes(arrival + dwell),
                          'plans': list(service.get('plans', default_plans))})
    return document


def parse_instance(document):
    """
    Builds a fully checked :py:class:`Instance` from a parsed document

    Parameters:

    - document -- dict as loaded from an instance YAML file

    Raises :py:class:`~yardsat.errors.InstanceError` with the offending field path.
    """
    if not isinstance(document, dict):
        raise InstanceError('instance document must be a mapping')
    source_digest = digest(document)
    if 'timetable' in document:
        document = expand_weekly(document)

    period = document.get('period_minutes')
    period = None if period is None else to_ticks(period, 'period_minutes')
    if period is not None and period <= 0:
        raise InstanceError('period must be positive', 'period_minutes')

    raw_resources = _parse_resources(_require(document, 'resources', ''))
    resources = tuple(Resource(rid, cap, track, _parse_unavailability(unav, period, path + '.unavailable'))
                      for rid, cap, track, unav, path in raw_resources)
    resource_ids = set(r.id for r in resources)
    operations = _parse_operations(_require(document, 'operations', ''), resource_ids)

    catalog = {}
    for pid, sequence in (document.get('plans') or {}).items():
        catalog[str(pid)] = sequence

    trains_doc = document.get('trains') or {}
    trains = []
    for status in (FIXED, CANDIDATE):
        for i, entry in enumerate(trains_doc.get(status) or []):
            trains.append(_parse_train(entry, status, catalog, operations,
                                       'trains.{}[{}]'.format(status, i)))
    if len(set(t.id for t in trains)) != len(trains):
        raise InstanceError('duplicate train id', 'trains')

    epsilon = document.get('epsilon_minutes')
    cap = document.get('utilization_cap')
    instance = Instance(resources=resources,
                        operations=operations,
                        trains=tuple(trains),
                        period=period,
                        epsilon=DEFAULT_EPSILON if epsilon is None else to_ticks(epsilon, 'epsilon_minutes'),
                        utilization_cap=DEFAULT_CAP if cap is None else float(cap),
                        name=str(document.get('name', '')),
                        scenario=dict(document.get('scenario') or {}),
                        digest=source_digest)
    _check_policy(instance)
    log.debug('Parsed instance %s: %d resources, %d operations, %d trains',
              instance.name, len(resources), len(operations), len(trains))
    return instance


def load_instance(maybe_path, epsilon=None, utilization_cap=None):
    """
    Reads and parses an instance, applying optional overrides

    Parameters:

    - maybe_path -- Path to a YAML document, or an already parsed document
    - epsilon -- Override for epsilon in minutes
    - utilization_cap -- Override for the utilization cap
    """
    instance = parse_instance(ensure_document(maybe_path))
    if epsilon is not None or utilization_cap is not None:
        instance = instance.with_overrides(epsilon, utilization_cap)
    return instance


def resource_runs(plan, operations, resource_id):
    """
    Maximal runs of consecutive plan positions whose operation uses a resource.
    Returns (first, last) index pairs into ``plan.sequence``.
    """
    runs = []
    start = None
    for j, oid in enumerate(plan.sequence):
        uses = resource_id in operations[oid].resources
        if uses and start is None:
            start = j
        elif not uses and start is not None:
            runs.append((start, j - 1))
            start = None
    if start is not None:
        runs.append((start, len(plan.sequence) - 1))
    return runs


def compute_derived(instance):
    """
    Computes the :py:class:`DerivedQuantities` of an instance. Pure and deterministic.

    Parameters:

    - instance -- A valid :py:class:`Instance`
    """
    trains = instance.trains
    if trains:
        makespan = max(t.departure_window[1] for t in trains) - min(t.arrival_window[0] for t in trains)
    else:
        makespan = 0
    if instance.period is None:
        replica_count = 1
        conflict_replicas = 1
    else:
        replica_count = max(1, math.ceil(makespan / instance.period))
        conflict_replicas = max(replica_count, math.ceil((makespan + instance.epsilon) / instance.period))

    eps = instance.epsilon
    min_stay = {}
    occ_plan = {}
    occ = {}
    acquisitions = {}
    for t in trains:
        min_stay[t.id] = max(0, t.departure_window[0] - t.arrival_window[1])
        for r in instance.resources:
            per_plan = []
            for p in t.plans:
                runs = resource_runs(p, instance.operations, r.id)
                work = sum(instance.operations[p.sequence[j]].duration
                           for first, last in runs for j in range(first, last + 1))
                value = work + eps * len(runs) if runs else 0
                occ_plan[(r.id, t.id, p.id)] = value
                acquisitions[(r.id, t.id, p.id)] = len(runs)
                per_plan.append(value)
            occ[(r.id, t.id)] = min(per_plan)
    return DerivedQuantities(makespan=makespan,
                             replica_count=replica_count,
                             conflict_replicas=conflict_replicas,
                             min_stay=min_stay,
                             min_occupation_plan=occ_plan,
                             min_occupation=occ,
                             acquisitions=acquisitions)
