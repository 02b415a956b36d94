#!/usr/bin/env python
"""heuristic.py

Warm start from the solution of a previous scenario, in two steps:

1. Balance: keep only the trains the previous solution served, let each
   operation move within a wide tolerance of its previous start and minimize
   the largest average utilization over the resources.
2. Saturate: fix the balanced schedule within a narrow tolerance and add every
   candidate train.

The step-2 result is only certified optimal when every candidate is served.
"""
import logging
import math
from dataclasses import dataclass, replace
from .errors import HeuristicError
from .graph import build_disjunctive_graph
from .instance import compute_derived
from .model import MIN_MAX_UTILIZATION
from .solver import (SolveOptions, SolveResult, ConstraintPool, saturate, solve_restricted,
                     OPTIMAL, FEASIBLE)
from .util import to_ticks

log = logging.getLogger(__name__)

BALANCE_TOLERANCE = 120
SATURATION_TOLERANCE = 30


@dataclass(frozen=True)
class FixingDirective:
    """
    Which trains to pin to a base solution, and how loosely

    - base_solution -- A :py:class:`~yardsat.solver.Solution`
    - tolerance -- Minutes either side of each base start; ``math.inf`` pins nothing
    - scope -- Train ids to fix; each must be served in the base solution
    - freeze_plan -- Restrict scoped trains to their base plan
    """
    base_solution: object
    tolerance: float
    scope: frozenset
    freeze_plan: bool = True

    def __post_init__(self):
        if self.tolerance < 0:
            raise HeuristicError('Tolerance must be non-negative')
        missing = set(self.scope) - set(self.base_solution.served)
        if missing:
            raise HeuristicError('Scoped trains not served in the base solution: ' + ', '.join(sorted(missing)))


def fix_with_tolerance(instance, directive):
    """
    Returns a copy of ``instance`` where every scoped train must be served and
    each of its operations starts within ``tolerance`` of the base schedule.
    Arrival and departure windows are left as they are.

    Parameters:

    - instance -- The instance to restrict
    - directive -- A :py:class:`FixingDirective`
    """
    base = directive.base_solution
    schedules = base.schedules(instance)
    eta = None if math.isinf(directive.tolerance) else to_ticks(directive.tolerance, 'tolerance')
    fixings = dict(instance.fixings)
    trains = []
    for train in instance.trains:
        if train.id not in directive.scope:
            trains.append(train)
            continue
        sched = schedules[train.id]
        plan = train.plan(sched.plan)
        if directive.freeze_plan:
            train = replace(train, plans=(plan,))
        trains.append(train)
        if eta is None:
            continue
        for oid, start in zip(plan.sequence, sched.starts):
            lo = start - eta
            if lo < 0:
                log.warning('Fixing %s/%s: lower end %d clipped to 0', train.id, oid, lo)
                lo = 0
            fixings[(train.id, oid)] = (lo, start + eta)
    required = frozenset(instance.required) | frozenset(
        t for t in directive.scope if not instance.train(t).is_fixed)
    return replace(instance, trains=tuple(trains), fixings=fixings, required=required)


def balance(instance, previous, tolerance=BALANCE_TOLERANCE, options=None):
    """
    Step 1: re-times the trains served by ``previous`` to minimize the largest
    average utilization. Returns (Solution, largest average utilization).
    Raises :py:class:`~yardsat.errors.HeuristicError` when no schedule exists.
    """
    options = options or SolveOptions()
    served = frozenset(previous.served)
    kept = replace(instance, trains=tuple(t for t in instance.trains if t.id in served))
    fixed = fix_with_tolerance(kept, FixingDirective(previous, tolerance, served))
    graph = build_disjunctive_graph(fixed, compute_derived(fixed), options.convention)
    solution, theta = solve_restricted(graph, ConstraintPool(), MIN_MAX_UTILIZATION, options=options)
    if solution is None:
        raise HeuristicError('Balance step infeasible: the previous schedule does not fit the new scenario')
    log.info('Balance step: largest average utilization %.3f', theta)
    return solution, theta


def heuristic_saturate(previous, instance, options=None,
                       balance_tolerance=BALANCE_TOLERANCE, saturation_tolerance=SATURATION_TOLERANCE):
    """
    Two-step warm start

    Parameters:

    - previous -- :py:class:`~yardsat.solver.Solution` of the previous scenario,
      valid for the train set of ``instance``
    - instance -- The new scenario
    - options -- :py:class:`~yardsat.solver.SolveOptions` for both steps
    - balance_tolerance -- Minutes of freedom in step 1
    - saturation_tolerance -- Minutes of freedom in step 2

    Returns a :py:class:`~yardsat.solver.SolveResult` flagged heuristic; its
    status is ``optimal`` only when every candidate is served.
    """
    options = options or SolveOptions()
    balanced, theta = balance(instance, previous, balance_tolerance, options)
    scope = frozenset(balanced.served)
    fixed = fix_with_tolerance(instance, FixingDirective(balanced, saturation_tolerance, scope))
    result = saturate(fixed, options)
    status = result.status
    if result.solution is not None and status == OPTIMAL:
        every = all(t.id in result.solution.served for t in instance.candidate_trains)
        status = OPTIMAL if every else FEASIBLE
    diagnostics = ['balance step: largest average utilization {:.4f}'.format(theta)] + result.diagnostics
    return SolveResult(status, result.solution, result.statistics, heuristic=True, diagnostics=diagnostics)
