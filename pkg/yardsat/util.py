#!/usr/bin/env python
"""util.py

Utility functions for the yardsat package: time conversion, document loading
and the command-line arguments shared by the ``yardsat`` subcommands.

All times inside yardsat are integer *ticks* of a tenth of a minute. Documents
use decimal minutes or ``HH:MM`` clock strings, converted exactly here.
"""
import hashlib
from decimal import Decimal, InvalidOperation
from pathlib import Path
import yaml
from .errors import InstanceError

TICKS_PER_MINUTE = 10
MINUTES_PER_DAY = 1440
Day_map = {'Mon': 0, 'Tue': 1, 'Wed': 2, 'Thu': 3, 'Fri': 4, 'Sat': 5, 'Sun': 6}


def check_path(maybe_path):
    """Helper function to check if an object is path-like"""
    if isinstance(maybe_path, Path) or isinstance(maybe_path, str):
        return True
    else:
        return False


def load_document(path):
    """Reads a YAML document from disk"""
    with open(str(path), 'r', encoding='utf-8') as f:
        return yaml.safe_load(f)


def ensure_document(maybe_path):
    """Helper function that lets either parsed documents or paths be passed around"""
    if check_path(maybe_path):
        return load_document(maybe_path)
    else:
        return maybe_path


def dump_document(document):
    """Deterministic YAML text for a document (keys keep their insertion order)"""
    return yaml.safe_dump(document, sort_keys=False, default_flow_style=False, allow_unicode=True)


def digest(document):
    """sha256 over the canonical (key-sorted) YAML form of a document"""
    text = yaml.safe_dump(document, sort_keys=True, default_flow_style=True)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def to_ticks(value, path=None):
    """
    Converts a document time to ticks

    Parameters:

    - value -- Decimal minutes (int, float or numeric string) or an ``HH:MM`` clock string
    - path  -- Field path used in error messages
    """
    if isinstance(value, bool) or value is None:
        raise InstanceError('expected a time, got ' + repr(value), path)
    if isinstance(value, str) and ':' in value:
        parts = value.strip().split(':')
        if len(parts) != 2:
            raise InstanceError('bad clock string ' + repr(value), path)
        try:
            hours = int(parts[0])
            minutes = Decimal(parts[1])
        except (ValueError, InvalidOperation):
            raise InstanceError('bad clock string ' + repr(value), path)
        if hours < 0 or minutes < 0 or minutes >= 60:
            raise InstanceError('bad clock string ' + repr(value), path)
        total = hours * 60 + minutes
    else:
        try:
            total = Decimal(str(value))
        except InvalidOperation:
            raise InstanceError('expected a time, got ' + repr(value), path)
    ticks = total * TICKS_PER_MINUTE
    if ticks != ticks.to_integral_value():
        raise InstanceError('time ' + str(value) + ' is not a multiple of 0.1 minute', path)
    return int(ticks)


def to_minutes(ticks):
    """Converts ticks back to minutes, as an int whenever that is exact"""
    if ticks % TICKS_PER_MINUTE == 0:
        return ticks // TICKS_PER_MINUTE
    return round(ticks / TICKS_PER_MINUTE, 1)


def format_clock(ticks):
    """Formats ticks as ``HH:MM`` (or ``D+n HH:MM`` past the first day)"""
    minutes = ticks // TICKS_PER_MINUTE
    tenths = ticks % TICKS_PER_MINUTE
    day, rest = divmod(minutes, MINUTES_PER_DAY)
    clock = '{:02d}:{:02d}'.format(rest // 60, rest % 60)
    if tenths:
        clock += '.{}'.format(tenths)
    if day:
        clock = 'D+{} {}'.format(day, clock)
    return clock


def add_common_arguments(parser):
    """Defines the arguments shared by the yardsat subcommands"""
    parser.add_argument('instance', help='Instance document (YAML)', type=str)
    parser.add_argument('--epsilon', type=float, default=None,
                        help='Override the instance epsilon (minutes)')
    parser.add_argument('--cap', type=float, default=None,
                        help='Override the utilization cap, e.g. 0.85')
    parser.add_argument('--convention', type=str, default='derived',
                        choices=['derived', 'literal'],
                        help='Sign convention for periodic conflict arcs, default=derived')
    parser.add_argument('--out_dir', type=str, default='outputs',
                        help='Directory for artifacts, default=outputs')
    parser.add_argument('--seed', type=int, default=0,
                        help='Deterministic seed (reserved)')
    parser.add_argument('--verbose', action='store_true',
                        help='Log solver progress')
    return parser
