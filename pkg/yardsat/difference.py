#!/usr/bin/env python
"""difference.py

An incremental system of difference constraints ``t_head >= t_tail + length``,
kept solved as longest-path labels from the origin. Arcs can be added one at a
time and the whole state rolled back to an earlier mark, which is what the
depth-first search in :py:mod:`~yardsat.solver` needs.

A positive cycle (an inconsistent system) shows up as the origin label rising
above zero, as a label passing its node's upper bound, or as a node being
relaxed more often than there are active nodes.
"""
import math
from collections import defaultdict, deque
from .graph import ORIGIN

NEG = -math.inf


class DifferenceSystem:
    """
    Longest-path labels with an undo trail

    Constructor parameters:

    - upper -- Optional dict node -> upper bound on its label
    """

    def __init__(self, upper=None):
        self.dist = {ORIGIN: 0}
        self.out = defaultdict(list)
        self.upper = upper or {}
        self._trail = []
        self.relaxations = 0

    def __contains__(self, node):
        return node in self.dist

    def mark(self):
        """Position to roll back to with :py:meth:`undo`"""
        return len(self._trail)

    def undo(self, mark):
        trail = self._trail
        while len(trail) > mark:
            entry = trail.pop()
            if entry[0] == 'dist':
                self.dist[entry[1]] = entry[2]
            elif entry[0] == 'arc':
                self.out[entry[1]].pop()
            else:
                del self.dist[entry[1]]

    def activate(self, node):
        if node not in self.dist:
            self.dist[node] = NEG
            self._trail.append(('node', node))

    def add_arc(self, tail, head, length):
        """
        Adds ``t_head >= t_tail + length``; returns False if the system became
        inconsistent. Both nodes must be active. On False the caller rolls back.
        """
        self.out[tail].append((head, length))
        self._trail.append(('arc', tail))
        if self.dist[tail] == NEG or self.dist[tail] + length <= self.dist[head]:
            return True
        self._set(head, self.dist[tail] + length)
        if not self._ok(head):
            return False
        return self._propagate(head)

    def _set(self, node, value):
        self._trail.append(('dist', node, self.dist[node]))
        self.dist[node] = value
        self.relaxations += 1

    def _ok(self, node):
        if node == ORIGIN:
            return self.dist[ORIGIN] <= 0
        ub = self.upper.get(node)
        return ub is None or self.dist[node] <= ub

    def _propagate(self, start):
        limit = len(self.dist) + 1
        counts = defaultdict(int)
        queue = deque([start])
        queued = {start}
        while queue:
            tail = queue.popleft()
            queued.discard(tail)
            base = self.dist[tail]
            for head, length in self.out[tail]:
                if base + length > self.dist[head]:
                    self._set(head, base + length)
                    if not self._ok(head):
                        return False
                    counts[head] += 1
                    if counts[head] > limit:
                        return False
                    if head not in queued:
                        queue.append(head)
                        queued.add(head)
        return True

    def labels(self):
        """Current labels of the active nodes (the earliest consistent start times)"""
        return {n: d for n, d in self.dist.items()}
