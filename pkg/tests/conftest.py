"""Shared builders for the yardsat tests"""
from pathlib import Path
import numpy as np
import pytest
from yardsat.instance import parse_instance, load_instance

DATA = Path(__file__).resolve().parent.parent / 'yardsat' / 'data'


def data_path(name):
    return DATA / name


def scenario(i):
    return load_instance(data_path('mini_scenario{}.yaml'.format(i)))


def one_track(trains, period=120, epsilon=1, cap=0.85, capacity=1, duration=30, max_wait=10,
              unavailable=None):
    """
    A yard with a single track and a single ``load`` operation

    ``trains`` is a list of (id, status, arrival, departure) with documents times.
    """
    doc = {'period_minutes': period,
           'epsilon_minutes': epsilon,
           'utilization_cap': cap,
           'resources': [{'id': 'track', 'capacity': capacity, 'track': True,
                          'unavailable': unavailable or []}],
           'operations': [{'id': 'a', 'kind': 'arrival'},
                          {'id': 'd', 'kind': 'departure'},
                          {'id': 'load', 'resources': ['track'], 'duration': duration,
                           'max_wait': max_wait}],
           'plans': {'p': ['a', 'load', 'd']},
           'trains': {'fixed': [], 'candidate': []}}
    for tid, status, arrival, departure in trains:
        doc['trains'][status].append({'id': tid, 'arrival': arrival, 'departure': departure, 'plans': ['p']})
    if period is None:
        del doc['period_minutes']
    return doc


def random_document(rng, max_trains=4, max_resources=3):
    """
    A small random periodic instance the brute-force oracle can handle:
    integer minutes, epsilon of one minute, at most two plans per train and
    two internal operations per plan.
    """
    period = int(rng.integers(40, 121))
    n_res = int(rng.integers(1, max_resources + 1))
    resources = []
    for r in range(n_res):
        res = {'id': 'r{}'.format(r), 'capacity': int(rng.integers(1, 3)), 'track': bool(r == 0)}
        if rng.random() < 0.25:
            h = int(rng.integers(0, period - 10))
            res['unavailable'] = [[h, h + int(rng.integers(3, 10))]]
        resources.append(res)
    operations = [{'id': 'arr', 'kind': 'arrival'}, {'id': 'dep', 'kind': 'departure'}]
    trains = {'fixed': [], 'candidate': []}
    n_trains = int(rng.integers(2, max_trains + 1))
    for t in range(n_trains):
        fixed = t == 0
        n_plans = 1 if fixed else int(rng.integers(1, 3))
        plans = []
        stays = []
        for p in range(n_plans):
            sequence = ['arr']
            low = high = 0
            for j in range(int(rng.integers(1, 3))):
                oid = 't{}p{}o{}'.format(t, p, j)
                duration = int(rng.integers(3, 16))
                max_wait = 0 if (fixed or j > 0) else int(rng.integers(0, 3))
                uses = sorted(set(rng.choice(n_res, size=int(rng.integers(1, min(2, n_res) + 1)),
                                             replace=False).tolist()))
                operations.append({'id': oid, 'resources': ['r{}'.format(u) for u in uses],
                                   'duration': duration, 'max_wait': max_wait})
                sequence.append(oid)
                low += duration
                high += duration + max_wait
            sequence.append('dep')
            plans.append({'id': 'p{}'.format(p), 'sequence': sequence})
            stays.append((low, high))
        arrival = int(rng.integers(0, period))
        if fixed:
            trains['fixed'].append({'id': 't0', 'arrival': arrival, 'departure': arrival + stays[0][0],
                                    'plans': plans})
            continue
        width = int(rng.integers(0, 6))
        low = min(s[0] for s in stays)
        high = max(s[1] for s in stays)
        q_lo = arrival + max(width, low)
        q_hi = arrival + width + high
        trains['candidate'].append({'id': 't{}'.format(t), 'arrival': [arrival, arrival + width],
                                    'departure': [q_lo, q_hi], 'plans': plans})
    return {'period_minutes': period, 'epsilon_minutes': 1, 'utilization_cap': 0.85,
            'resources': resources, 'operations': operations, 'trains': trains}


def random_instances(seed, count, **kwargs):
    rng = np.random.default_rng(seed)
    return [parse_instance(random_document(rng, **kwargs)) for _ in range(count)]


@pytest.fixture
def toy():
    return load_instance(data_path('toy.yaml'))
