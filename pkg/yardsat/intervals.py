#!/usr/bin/env python
"""intervals.py

Sweeps over half-open intervals ``[start, end)``: maximal cliques of an
interval graph, folding onto a period circle, and the unrolled reference
computation the folding is checked against.

Intervals are (start, end, key) triples; keys are carried through untouched.
"""


def _events(intervals):
    events = []
    for i, (start, end, _) in enumerate(intervals):
        if end > start:
            events.append((start, 1, i))
            events.append((end, 0, i))
    # ends sort before starts at the same time: [a, b) and [b, c) do not meet
    events.sort()
    return events


def maximal_cliques(intervals):
    """
    All maximal cliques of the interval graph, by one sorted sweep

    Parameters:

    - intervals -- List of (start, end, key)

    Returns a list of key lists, in order of the sweep position; keys within a
    clique keep the order of ``intervals``.
    """
    active = set()
    grown = False
    cliques = []
    for _, kind, i in _events(intervals):
        if kind == 1:
            active.add(i)
            grown = True
        else:
            if grown:
                cliques.append([intervals[j][2] for j in sorted(active)])
                grown = False
            active.discard(i)
    return cliques


def max_overlap(intervals):
    """Largest number of intervals sharing a point"""
    best = 0
    count = 0
    for _, kind, _ in _events(intervals):
        count += 1 if kind == 1 else -1
        best = max(best, count)
    return best


def fold_interval(start, end, period):
    """
    Maps one interval of the line onto [0, period), returning pieces.
    An interval longer than the period covers the circle more than once.
    """
    pieces = []
    length = end - start
    if length <= 0:
        return pieces
    full, rest = divmod(length, period)
    for _ in range(full):
        pieces.append((0, period))
    if rest:
        s = start % period
        if s + rest <= period:
            pieces.append((s, s + rest))
        else:
            pieces.append((s, period))
            pieces.append((0, s + rest - period))
    return pieces


def folded_profile(intervals, period):
    """
    Step function of the concurrent count over the period circle

    Parameters:

    - intervals -- List of (start, end, key) on the line
    - period -- Period length

    Returns a list of (start, end, count) segments covering [0, period) with
    exact breakpoints; neighbouring segments always differ in count.
    """
    delta = {0: 0, period: 0}
    for start, end, _ in intervals:
        for s, e in fold_interval(start, end, period):
            delta[s] = delta.get(s, 0) + 1
            delta[e] = delta.get(e, 0) - 1
    points = sorted(delta)
    segments = []
    count = 0
    for a, b in zip(points, points[1:]):
        count += delta[a]
        if segments and segments[-1][2] == count:
            segments[-1] = (segments[-1][0], b, count)
        else:
            segments.append((a, b, count))
    return segments


def profile_max(segments):
    return max((c for _, _, c in segments), default=0)


def unrolled_max(intervals, period, replicas):
    """
    Maximum concurrent count on the line after copying every interval to
    ``replicas`` consecutive periods; with enough replicas this equals the
    folded maximum.
    """
    copies = []
    for start, end, key in intervals:
        for m in range(replicas):
            copies.append((start + m * period, end + m * period, (key, m)))
    return max_overlap(copies)


def violating_cliques(intervals, capacity):
    """Maximal cliques with more than ``capacity`` members"""
    return [c for c in maximal_cliques(intervals) if len(c) > capacity]


def trim_clique(members, size, limit=5):
    """
    Reduces a clique to at most ``limit`` subsets of ``size`` members: the
    subset with the longest common overlap, then the first ``size`` members.

    Parameters:

    - members -- Pairwise overlapping (start, end, key) triples, in canonical order
    - size -- Subset size (capacity + 1)
    - limit -- Maximum number of subsets returned
    """
    if len(members) <= size:
        return [[key for _, _, key in members]]
    best = None
    for j, (start_j, _, _) in enumerate(members):
        others = [i for i, m in enumerate(members) if i != j and m[0] <= start_j]
        if len(others) < size - 1:
            continue
        others.sort(key=lambda i: (-members[i][1], i))
        chosen = sorted([j] + others[:size - 1])
        overlap = min(members[i][1] for i in chosen) - start_j
        if best is None or overlap >= best[0]:
            best = (overlap, chosen)
    subsets = [best[1]]
    first = list(range(size))
    if first != best[1]:
        subsets.append(first)
    return [[members[i][2] for i in s] for s in subsets[:limit]]
