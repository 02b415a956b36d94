#!/usr/bin/env python
"""mps.py

Writes an assembled :py:class:`~yardsat.model.ModelInstance` in fixed-format
MPS, plus a name map linking the 8-character row and column names back to
model entities.

Names are built from the variable family (or row tag) and its catalog index.
When a name would not fit in 8 characters it is shortened to a prefix and a
hash of the full name; remaining clashes get a counter in the hash.
The objective is always written for minimization, so ``max`` models are
written with negated costs and the name map says so.
"""
import hashlib
from pathlib import Path
from .errors import ModelError
from .model import CONTINUOUS

FAMILY_CODES = {'phi': 'F', 'w': 'W', 'x': 'X', 'xa': 'A', 'y1': 'Y', 'y2': 'V',
                'z': 'Z', 'sigma': 'S', 'g': 'G', 'rb': 'B', 'ra': 'R', 'rd': 'D', 'theta': 'T'}
TAG_CODES = {'fixed-trains': 'FT', 'plan-selection': 'PS', 'node-activation': 'NA',
             'unusable-node': 'UN', 'arc-activation': 'AA', 'disjunction-selection': 'DS',
             'precedence': 'PR', 'capacity': 'CA', 'unavailability': 'UV',
             'unavailability-bracket': 'UB', 'utilization': 'UT', 'utilization-cap': 'UC',
             'balance': 'BL', 'floor': 'FL', 'capacity-cuts': 'CC'}
SENSE_CODES = {'<=': 'L', '>=': 'G', '=': 'E'}
OBJECTIVE_ROW = 'COST'


class _Namer:
    def __init__(self):
        self.used = {OBJECTIVE_ROW}

    def __call__(self, prefix, number):
        name = '{}{}'.format(prefix, number)
        if len(name) > 8 or name in self.used:
            full = name
            salt = 0
            while len(name) > 8 or name in self.used:
                h = hashlib.sha1('{}#{}'.format(full, salt).encode()).hexdigest()
                name = (prefix[:2] + h)[:8]
                salt += 1
        self.used.add(name)
        return name


def _number(value):
    """A number in at most 12 characters"""
    value = float(value)
    if value == int(value) and abs(value) < 1e11:
        return str(int(value))
    for digits in range(11, 3, -1):
        text = '{:.{}g}'.format(value, digits)
        if len(text) <= 12:
            return text
    raise ModelError('Cannot write {} in 12 characters'.format(value))


def _field_line(f1='', f2='', f3='', f4='', f5='', f6=''):
    line = ' {:<2} {:<8}  {:<8}  {:>12}'.format(f1, f2, f3, f4)
    if f5:
        line += '   {:<8}  {:>12}'.format(f5, f6)
    return line.rstrip()


def export_model(model):
    """
    Fixed-format MPS text and name map of a model

    Parameters:

    - model -- An assembled :py:class:`~yardsat.model.ModelInstance`

    Returns (mps text, name map text). Rows without terms are dropped when
    trivially satisfied; an unsatisfiable empty row raises
    :py:class:`~yardsat.errors.ModelError`.
    """
    namer = _Namer()
    cat = model.catalog
    columns = [namer(FAMILY_CODES.get(v.family, 'C'), v.index) for v in cat]
    rows = []
    counters = {}
    for i, row in enumerate(model.constraints):
        if not row.terms:
            ok = {'<=': 0 <= row.rhs, '>=': 0 >= row.rhs, '=': row.rhs == 0}[row.sense]
            if not ok:
                raise ModelError('Empty row {} #{} cannot be satisfied'.format(row.tag, i))
            continue
        code = TAG_CODES.get(row.tag, 'RW')
        counters[code] = counters.get(code, 0) + 1
        rows.append((namer(code, counters[code]), i, row))

    sign = -1 if model.sense == 'max' else 1
    entries = {v.index: [] for v in cat}
    for var, coef in model.objective.items():
        if coef:
            entries[var].append((OBJECTIVE_ROW, sign * coef))
    for name, _, row in rows:
        for var, coef in row.terms:
            entries[var].append((name, coef))

    out = ['NAME          ' + model.name, 'ROWS', _field_line('N', OBJECTIVE_ROW)]
    for name, _, row in rows:
        out.append(_field_line(SENSE_CODES[row.sense], name))
    out.append('COLUMNS')
    in_integers = False
    for v in cat:
        integer = v.kind != CONTINUOUS
        if integer != in_integers:
            out.append(_field_line('', 'MARKER', "'MARKER'", '', "'INTORG'" if integer else "'INTEND'"))
            in_integers = integer
        col = columns[v.index]
        if not entries[v.index]:
            # Keep the column declared
            out.append(_field_line('', col, OBJECTIVE_ROW, '0'))
        for rname, coef in entries[v.index]:
            out.append(_field_line('', col, rname, _number(coef)))
    if in_integers:
        out.append(_field_line('', 'MARKER', "'MARKER'", '', "'INTEND'"))
    out.append('RHS')
    for name, _, row in rows:
        if row.rhs:
            out.append(_field_line('', 'RHS', name, _number(row.rhs)))
    out.append('BOUNDS')
    for v in cat:
        col = columns[v.index]
        if v.lb == v.ub:
            out.append(_field_line('FX', 'BND', col, _number(v.lb)))
            continue
        if v.lb != 0:
            out.append(_field_line('LO', 'BND', col, _number(v.lb)))
        elif v.kind != CONTINUOUS:
            out.append(_field_line('LO', 'BND', col, '0'))
        if v.ub != float('inf'):
            out.append(_field_line('UP', 'BND', col, _number(v.ub)))
        elif v.kind != CONTINUOUS:
            out.append(_field_line('PL', 'BND', col))
    out.append('ENDATA')
    mps = '\n'.join(out) + '\n'

    names = ['# objective: minimize {}({})'.format('-' if sign < 0 else '+', model.objective_kind)]
    for v in cat:
        names.append('{}\t{}'.format(columns[v.index], v.name))
    for name, i, row in rows:
        names.append('{}\t{}#{}'.format(name, row.tag, i))
    return mps, '\n'.join(names) + '\n'


def write_model(model, path):
    """Writes ``<path>`` (MPS) and ``<path>.names`` (name map); returns both paths"""
    mps, names = export_model(model)
    path = Path(path)
    names_path = path.with_name(path.name + '.names')
    path.write_text(mps, encoding='utf-8')
    names_path.write_text(names, encoding='utf-8')
    return path, names_path
