#!/usr/bin/env python
"""errors.py

Exception classes shared by the yardsat modules
"""


class YardError(Exception):
    """Base class for everything yardsat raises on purpose"""


class InstanceError(YardError):
    """
    Raised when an instance document is malformed or inconsistent

    Constructor parameters:

    - message -- What went wrong
    - path    -- Field path inside the document, e.g. ``trains.fixed[2].arrival``
    """

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = path + ': ' + message
        super().__init__(message)


class GraphError(YardError):
    """Raised when an instance cannot be turned into a consistent disjunctive graph"""


class ModelError(YardError):
    """Raised when the mixed-integer model cannot be assembled or exported"""


class OracleGuardError(YardError):
    """
    Raised when an instance is too large for exhaustive enumeration

    Constructor parameters:

    - message -- Human readable refusal
    - report  -- dict with the measured sizes and the limits they broke
    """

    def __init__(self, message, report):
        self.report = report
        super().__init__(message + ' ' + str(report))


class HeuristicError(YardError):
    """Raised when a step of the warm-start heuristic has no feasible schedule"""
