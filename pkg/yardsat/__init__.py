#!/usr/bin/env python
"""
The yardsat package. Everything important is in a submodule, but
:py:func:`~yardsat.instance.load_instance`, :py:func:`~yardsat.solver.saturate`,
:py:func:`~yardsat.heuristic.heuristic_saturate` and
:py:func:`~yardsat.validator.check_solution` are imported here for convenient
access. Between them, they load a yard, fill its timetable and check the result.
"""

from .instance import load_instance, compute_derived
from .solver import SolveOptions, Solution, saturate
from .heuristic import heuristic_saturate
from .validator import check_solution
