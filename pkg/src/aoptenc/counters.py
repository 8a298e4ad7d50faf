"""Per-phase tallies of Helmholtz-operator solves."""
from collections import Counter
from contextlib import contextmanager


class SolveCounter:
    """Counts solves with the Helmholtz operator (or its adjoint), tagged by the active phase.

    One right-hand side is one solve.  Phases nest; the innermost one is charged.
    """

    def __init__(self):
        self.counts = Counter()
        self.cg_iterations = Counter()
        self._stack = ["untagged"]

    @property
    def current(self):
        return self._stack[-1]

    @contextmanager
    def phase(self, name):
        self._stack.append(name)
        try:
            yield self
        finally:
            self._stack.pop()

    def add(self, n=1):
        self.counts[self.current] += int(n)

    def add_cg(self, n):
        self.cg_iterations[self.current] += int(n)

    @property
    def total(self):
        return sum(self.counts.values())

    def merge(self, other):
        self.counts.update(other.counts)
        self.cg_iterations.update(other.cg_iterations)
        return self

    def snapshot(self):
        return dict(self.counts)

    def __repr__(self):
        return f"SolveCounter({dict(self.counts)})"
