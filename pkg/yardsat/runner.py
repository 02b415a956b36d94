#!/usr/bin/env python
"""runner.py

The ``yardsat`` command-line tool, installed by PIP. It runs one scenario from
an instance document and writes its artifacts to ``<out_dir>/<run_id>/``.

Subcommands:

``yardsat run instance.yaml`` saturates the instance (``--mode saturate``, the
default), answers a single feasibility question (``--mode feasibility --floor N``)
or warm-starts from a previous solution (``--mode heuristic --previous solution.yaml``).

``yardsat validate instance.yaml solution.yaml`` checks a hand-written or earlier
schedule and writes the verdict and utilization tables.

``yardsat export instance.yaml`` writes the assembled model as MPS with its name map.

``yardsat heatmap instance.yaml solution.yaml`` writes only the utilization tables.

Exit codes: 0 ok, 1 unexpected failure, 2 infeasible, 3 time budget exhausted,
4 input error. Artifacts written before a failure are kept.
"""
import argparse
import hashlib
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from .errors import YardError, InstanceError, GraphError, HeuristicError
from .graph import build_disjunctive_graph
from .instance import load_instance, compute_derived
from .model import assemble_model
from .mps import export_model
from .solver import (SolveOptions, SolveResult, ConstraintPool, Solution, saturate, solve_feasibility,
                     OPTIMAL, FEASIBLE, INFEASIBLE_AT_FLOOR, TIMEOUT, NATIVE, MILP)
from .heuristic import heuristic_saturate
from .validator import check_solution
from .report import solution_document, verdict_document, emit_heatmap, capacity_report, header
from .util import add_common_arguments, load_document

log = logging.getLogger(__name__)

SATURATE = 'saturate'
FEASIBILITY = 'feasibility'
HEURISTIC = 'heuristic'
EXPORT_ONLY = 'export-only'
VALIDATE_ONLY = 'validate-only'
HEATMAP_ONLY = 'heatmap-only'
MODES = (SATURATE, FEASIBILITY, HEURISTIC, EXPORT_ONLY, VALIDATE_ONLY, HEATMAP_ONLY)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INFEASIBLE = 2
EXIT_TIMEOUT = 3
EXIT_INPUT = 4


@dataclass(frozen=True)
class ScenarioRun:
    """
    One scenario run

    - scenario -- Scenario id, used in the run id
    - instance_path -- Instance document
    - mode -- One of :py:data:`MODES`
    - options -- :py:class:`~yardsat.solver.SolveOptions`
    - out_dir -- Parent directory of the run directory
    - epsilon, cap -- Overrides of the instance epsilon (minutes) and utilization cap
    - solution_path -- Solution to validate, or the previous solution for ``heuristic``
    - floor -- Served-train floor for ``feasibility``
    """
    scenario: str
    instance_path: str
    mode: str = SATURATE
    options: SolveOptions = field(default_factory=SolveOptions)
    out_dir: str = 'outputs'
    epsilon: float = None
    cap: float = None
    solution_path: str = None
    floor: int = None

    def run_id(self, digest):
        key = repr((self.mode, self.options, self.epsilon, self.cap, self.floor, digest))
        if self.solution_path:
            key += Path(self.solution_path).read_bytes().hex()
        return '{}-{}'.format(self.scenario, hashlib.sha256(key.encode()).hexdigest()[:12])


class _Stage:
    """Tags failures with the pipeline stage they happened in"""

    def __init__(self):
        self.name = None

    def __call__(self, name):
        self.name = name
        print('*** ' + name.capitalize())
        return self


def _write(artifacts, directory, name, text):
    path = directory / name
    path.write_text(text, encoding='utf-8')
    artifacts[name] = str(path)
    return path


def _status_code(status):
    return {OPTIMAL: EXIT_OK, FEASIBLE: EXIT_OK, INFEASIBLE_AT_FLOOR: EXIT_INFEASIBLE,
            TIMEOUT: EXIT_TIMEOUT}.get(status, EXIT_FAILURE)


def run_scenario(run):
    """
    Executes a :py:class:`ScenarioRun`

    Returns (exit code, dict artifact name -> path, list of diagnostics).
    """
    artifacts = {}
    diagnostics = []
    stage = _Stage()
    try:
        stage('load')
        instance = load_instance(run.instance_path, run.epsilon, run.cap)
        run_id = run.run_id(instance.digest)
        directory = Path(run.out_dir) / run_id
        directory.mkdir(parents=True, exist_ok=True)
        print('Run id:', run_id)

        if run.mode in (VALIDATE_ONLY, HEATMAP_ONLY):
            stage('validate')
            solution = Solution.from_document(load_document(run.solution_path), instance)
            verdict, profiles = check_solution(solution, instance)
            heat, summary = emit_heatmap(profiles, instance.utilization_cap, run_id, instance.digest)
            _write(artifacts, directory, 'heatmap.csv', heat)
            _write(artifacts, directory, 'summary.csv', summary)
            if run.mode == VALIDATE_ONLY:
                _write(artifacts, directory, 'verdict.yaml', verdict_document(verdict, run_id, instance.digest))
                if not verdict.ok:
                    diagnostics.extend('{} {}: {}'.format(c.check, c.entity, c.detail) for c in verdict.failures)
                    return EXIT_INFEASIBLE, artifacts, diagnostics
            return EXIT_OK, artifacts, diagnostics

        stage('graph')
        derived = compute_derived(instance)
        graph = build_disjunctive_graph(instance, derived, run.options.convention)

        if run.mode == EXPORT_ONLY:
            stage('export')
            mps, names = export_model(assemble_model(graph, instance, derived, ConstraintPool(),
                                                     use_cuts=run.options.use_cuts))
            _write(artifacts, directory, 'model.mps', header(run_id, instance.digest, '*') + mps)
            _write(artifacts, directory, 'model.mps.names', header(run_id, instance.digest) + names)
            return EXIT_OK, artifacts, diagnostics

        stage('solve')
        if run.mode == SATURATE:
            result = saturate(instance, run.options, graph)
        elif run.mode == FEASIBILITY:
            floor = run.floor
            if floor is None:
                floor = sum(1 for t in instance.trains if instance.must_serve(t))
            solution = solve_feasibility(graph, ConstraintPool(), floor, run.options)
            result = SolveResult(FEASIBLE if solution is not None else INFEASIBLE_AT_FLOOR, solution)
        elif run.mode == HEURISTIC:
            previous = Solution.from_document(load_document(run.solution_path), instance)
            result = heuristic_saturate(previous, instance, run.options)
        else:
            raise ValueError('Unknown mode: ' + str(run.mode))
        diagnostics.extend(result.diagnostics)
        _write(artifacts, directory, 'solution.yaml', solution_document(result, instance, run_id, instance.digest))

        if result.solution is not None:
            stage('validate')
            verdict, profiles = check_solution(result.solution, instance)
            _write(artifacts, directory, 'verdict.yaml', verdict_document(verdict, run_id, instance.digest))
            heat, summary = emit_heatmap(profiles, instance.utilization_cap, run_id, instance.digest)
            _write(artifacts, directory, 'heatmap.csv', heat)
            _write(artifacts, directory, 'summary.csv', summary)
            if not verdict.ok:
                diagnostics.append('validate: solution failed {} checks'.format(len(verdict.failures)))
                return EXIT_FAILURE, artifacts, diagnostics

        stage('report')
        _write(artifacts, directory, 'report.txt', capacity_report(result, instance, run_id, instance.digest))
        return _status_code(result.status), artifacts, diagnostics
    except (InstanceError, GraphError) as err:
        diagnostics.append('{}: {}'.format(stage.name, err))
        return EXIT_INPUT, artifacts, diagnostics
    except HeuristicError as err:
        diagnostics.append('{}: {}'.format(stage.name, err))
        return EXIT_INFEASIBLE, artifacts, diagnostics
    except (YardError, OSError) as err:
        diagnostics.append('{}: {}'.format(stage.name, err))
        return EXIT_FAILURE, artifacts, diagnostics


def _options(args):
    return SolveOptions(time_budget=getattr(args, 'time_budget', None),
                        use_cuts=not getattr(args, 'no_cuts', False),
                        engine=getattr(args, 'engine', NATIVE),
                        convention=args.convention)


def main(args=None):
    """
    The main function that is called from the command line.

    Parameters:

    - args -- The command-line arguments. See module docstring or command-line help for a full list
    """
    parser = argparse.ArgumentParser(prog='yardsat',
                                     description='Saturates the timetable of a rail-road transshipment yard')
    commands = parser.add_subparsers(dest='command', required=True)

    run_parser = add_common_arguments(commands.add_parser('run', help='Solve a scenario'))
    run_parser.add_argument('--mode', type=str, default=SATURATE, choices=[SATURATE, FEASIBILITY, HEURISTIC],
                            help='What to solve, default=saturate')
    run_parser.add_argument('--previous', type=str, default=None,
                            help='Previous solution for --mode heuristic')
    run_parser.add_argument('--floor', type=int, default=None,
                            help='Served-train floor for --mode feasibility')
    run_parser.add_argument('--time_budget', type=float, default=None,
                            help='Seconds before returning the incumbent')
    run_parser.add_argument('--no_cuts', action='store_true', help='Disable the capacity cuts')
    run_parser.add_argument('--engine', type=str, default=NATIVE, choices=[NATIVE, MILP],
                            help='Restricted-problem engine, default=native')
    run_parser.add_argument('--scenario', type=str, default=None, help='Scenario id for the run id')

    validate_parser = add_common_arguments(commands.add_parser('validate', help='Check a solution'))
    validate_parser.add_argument('solution', type=str, help='Solution document')
    validate_parser.add_argument('--scenario', type=str, default=None, help='Scenario id for the run id')

    export_parser = add_common_arguments(commands.add_parser('export', help='Write the model as MPS'))
    export_parser.add_argument('--no_cuts', action='store_true', help='Leave out the capacity cuts')
    export_parser.add_argument('--scenario', type=str, default=None, help='Scenario id for the run id')

    heatmap_parser = add_common_arguments(commands.add_parser('heatmap', help='Utilization tables of a solution'))
    heatmap_parser.add_argument('solution', type=str, help='Solution document')
    heatmap_parser.add_argument('--scenario', type=str, default=None, help='Scenario id for the run id')

    args = parser.parse_args(args)
    logging.basicConfig(format='%(levelname)s %(name)s: %(message)s')
    logging.getLogger('yardsat').setLevel(logging.DEBUG if args.verbose else logging.WARNING)

    mode = {'validate': VALIDATE_ONLY, 'export': EXPORT_ONLY, 'heatmap': HEATMAP_ONLY}.get(args.command)
    if mode is None:
        mode = args.mode
    solution_path = getattr(args, 'solution', None) or getattr(args, 'previous', None)
    if mode == HEURISTIC and not solution_path:
        parser.error('--mode heuristic needs --previous')
    run = ScenarioRun(scenario=args.scenario or Path(args.instance).stem,
                      instance_path=args.instance,
                      mode=mode,
                      options=_options(args),
                      out_dir=args.out_dir,
                      epsilon=args.epsilon,
                      cap=args.cap,
                      solution_path=solution_path,
                      floor=getattr(args, 'floor', None))
    code, artifacts, diagnostics = run_scenario(run)
    for name in sorted(artifacts):
        print('Wrote:', artifacts[name])
    for d in diagnostics:
        print('!!! ' + d, file=sys.stderr)
    return code


if __name__ == '__main__':
    sys.exit(main())
