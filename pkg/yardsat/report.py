#!/usr/bin/env python
"""report.py

Artifacts of a scenario run: the solution and verdict documents, the
utilization heatmap and summary tables, and a short capacity report in words.

Every artifact starts with the run id and the instance digest so that files
from different runs cannot be mixed up. Nothing here depends on the wall
clock, so identical runs write identical files.
"""
import io
import pandas as pd
from .util import to_minutes, dump_document, MINUTES_PER_DAY, TICKS_PER_MINUTE

BOTTLENECK_MARGIN = 0.05
BOTTLENECK_SATURATION = 0.5


def header(run_id, digest, comment='#'):
    return '{} run_id={} digest={}\n'.format(comment, run_id, digest)


def solution_document(result, instance, run_id, digest):
    """YAML text of a :py:class:`~yardsat.solver.SolveResult`"""
    doc = {'run_id': run_id, 'digest': digest}
    doc.update(result.to_document(instance))
    return dump_document(doc)


def verdict_document(verdict, run_id, digest):
    """YAML text of a :py:class:`~yardsat.validator.Verdict`"""
    doc = {'run_id': run_id, 'digest': digest, 'ok': verdict.ok,
           'failures': len(verdict.failures), 'checks': verdict.to_document()}
    return dump_document(doc)


def heatmap_frame(profiles):
    """Long format: one row per profile segment, exact breakpoints, in minutes"""
    rows = []
    for rid, p in profiles.items():
        for s, e, c in p.segments:
            rows.append({'resource': rid, 'window_start_min': to_minutes(s),
                         'window_end_min': to_minutes(e), 'count': c, 'capacity': p.capacity})
    return pd.DataFrame(rows, columns=['resource', 'window_start_min', 'window_end_min', 'count', 'capacity'])


def summary_frame(profiles, cap):
    """
    Per resource: average utilization, share of time at full capacity, and
    whether it looks like a bottleneck (average within 5 points of the cap, or
    saturated more than half of the time)
    """
    rows = []
    for rid, p in profiles.items():
        avg = p.average
        sat = p.saturated_fraction
        rows.append({'resource': rid, 'avg_fraction': round(avg, 6), 'saturated_fraction': round(sat, 6),
                     'bottleneck': bool(avg >= cap - BOTTLENECK_MARGIN or sat > BOTTLENECK_SATURATION)})
    return pd.DataFrame(rows, columns=['resource', 'avg_fraction', 'saturated_fraction', 'bottleneck'])


def _csv(frame, run_id, digest):
    buffer = io.StringIO()
    if run_id is not None:
        buffer.write(header(run_id, digest))
    frame.to_csv(buffer, index=False, lineterminator='\n')
    return buffer.getvalue()


def emit_heatmap(profiles, cap=0.85, run_id=None, digest=None):
    """
    CSV texts of the heatmap and of the per-resource summary

    Parameters:

    - profiles -- dict resource id -> :py:class:`~yardsat.validator.OccupancyProfile`
    - cap -- Utilization cap used to flag bottlenecks
    - run_id, digest -- Stamped on the first line when given

    Returns (heatmap csv, summary csv). Read them back with ``pd.read_csv(..., comment='#')``.
    """
    return (_csv(heatmap_frame(profiles), run_id, digest),
            _csv(summary_frame(profiles, cap), run_id, digest))


def weekly_equivalent(served, period_minutes, days_per_week=7):
    """Trains per period scaled to a week of ``days_per_week`` operating days"""
    return served * days_per_week * MINUTES_PER_DAY / period_minutes


def increment(value, baseline):
    """Relative change as text, e.g. 96 against 47 gives ``+104%``"""
    return '{:+.0f}%'.format(100.0 * (value - baseline) / baseline)


def _number(value):
    return str(int(value)) if float(value).is_integer() else '{:.1f}'.format(value)


def capacity_report(result, instance, run_id, digest):
    """
    A few lines on what the run achieved: status, trains served per period,
    the weekly equivalent and the increment over the declared baseline
    """
    scenario = instance.scenario or {}
    lines = [header(run_id, digest).rstrip('\n'),
             'Scenario: {}'.format(scenario.get('id', instance.name or '-')),
             'Status: {}{}'.format(result.status, ' (heuristic)' if result.heuristic else '')]
    solution = result.solution
    if solution is None:
        lines.append('No schedule found')
        for d in result.diagnostics:
            lines.append('Note: ' + d)
        return '\n'.join(lines) + '\n'
    served = solution.served_count
    fixed = served - solution.objective
    if instance.period:
        period_minutes = instance.period / TICKS_PER_MINUTE
        lines.append('Trains per {} min: {} ({} fixed, {} added)'.format(
            _number(period_minutes), served, fixed, solution.objective))
        days = scenario.get('days_per_week', 7)
        weekly = weekly_equivalent(served, period_minutes, days)
        lines.append('Weekly equivalent: {} trains ({} operating days)'.format(_number(weekly), days))
        baseline = scenario.get('baseline_trains')
        if baseline:
            label = scenario.get('baseline_label', 'baseline')
            lines.append('Against {} of {}: {}'.format(label, baseline, increment(weekly, baseline)))
    else:
        lines.append('Trains served: {} ({} fixed, {} added)'.format(served, fixed, solution.objective))
    for d in result.diagnostics:
        lines.append('Note: ' + d)
    return '\n'.join(lines) + '\n'
