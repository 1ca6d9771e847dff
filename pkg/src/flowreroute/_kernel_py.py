"""Pure-Python state-evaluation kernel.

Mirrors the compiled kernel in ``_speedups.pyx``.  A state is the set of
resolved non-empty updates, packed into an integer bitmask.  For every pair
each vertex has at most one active out-edge, so the transient flow is found by
a single walk from the source; the walk either reaches the terminal (unique
path), dead-ends, or cycles (no path).
"""

from __future__ import annotations

OK = 0
NO_TRANSIENT = 1
NON_UNIQUE = 2
CAPACITY = 3


class StateKernel:
    backend = "pure"

    def __init__(
        self,
        n_vertices: int,
        source: int,
        terminal: int,
        edge_heads: list[int],
        capacities: list[int],
        demands: list[int],
        old_out: list[int],
        new_out: list[int],
        update_bits: list[int],
        n_updates: int,
    ):
        self.n_vertices = n_vertices
        self.source = source
        self.terminal = terminal
        self.edge_heads = edge_heads
        self.capacities = capacities
        self.demands = demands
        self.old_out = old_out
        self.new_out = new_out
        self.update_bits = update_bits
        self.n_updates = n_updates
        self.n_pairs = len(demands)
        self._loads = [0] * len(edge_heads)

    def _walk(self, pair: int, mask: int) -> list[int] | None:
        """Edge ids of the pair's transient path, or None."""
        base = pair * self.n_vertices
        old_out = self.old_out
        new_out = self.new_out
        bits = self.update_bits
        heads = self.edge_heads
        v = self.source
        path: list[int] = []
        steps = 0
        while v != self.terminal:
            idx = base + v
            bit = bits[idx]
            if bit >= 0 and (mask >> bit) & 1:
                eid = new_out[idx]
            else:
                eid = old_out[idx]
            if eid < 0:
                return None
            path.append(eid)
            v = heads[eid]
            steps += 1
            if steps > self.n_vertices:
                return None  # cycle
        return path

    def check(self, mask: int) -> tuple[int, int]:
        """(OK, 0) if the state is valid, else (reason code, pair or edge id)."""
        loads = self._loads
        touched: list[int] = []
        try:
            for pair in range(self.n_pairs):
                path = self._walk(pair, mask)
                if path is None:
                    return (NO_TRANSIENT, pair)
                d = self.demands[pair]
                for eid in path:
                    if loads[eid] == 0:
                        touched.append(eid)
                    loads[eid] += d
            bad = -1
            for eid in touched:
                if loads[eid] > self.capacities[eid] and (bad < 0 or eid < bad):
                    bad = eid
            if bad >= 0:
                return (CAPACITY, bad)
            return (OK, 0)
        finally:
            for eid in touched:
                loads[eid] = 0

    def transient(self, pair: int, mask: int) -> list[int] | None:
        return self._walk(pair, mask)
