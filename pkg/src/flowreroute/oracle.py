"""Exhaustive ground truth: minimum-round search over resolved-update states.

State validity depends only on the *set* of resolved updates, never on the
order they were reached in, so everything here is memoized on bitmasks over
the canonical update order.  Feasibility is decided by reachability over
single-update steps, which is exact because

* resolving an activation-only update ("prep": the vertex has a new out-edge
  but no old one) never changes any transient flow from a valid state, so
  preps can be moved to the front of any valid sequence, and
* resolving a deactivation-only update ("cleanup") never changes any
  transient flow either, so cleanups can be deferred to the end,

leaving reachability over the remaining flip updates, and any round can be
split into single-update rounds (every prefix is one of its checked subsets).
The minimum round count is then found by iterative deepening over round
partitions, pruning any round with an invalid subset.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from ._kernel import kernel_for
from ._kernel_py import OK
from .errors import TooManyUpdatesError
from .model import Update, UpdateFlowNetwork, UpdateSequence


@dataclass(frozen=True)
class OracleBudget:
    max_updates: int = 16
    max_states: int = 5_000_000
    time_limit: float = 60.0


@dataclass(frozen=True)
class OracleResult:
    status: str  # "optimal" | "infeasible" | "budget-exhausted"
    sequence: Optional[UpdateSequence] = None
    rounds: Optional[int] = None
    explored_states: int = 0
    elapsed: float = 0.0


class _BudgetExceeded(Exception):
    pass


class _Search:
    def __init__(self, net: UpdateFlowNetwork, budget: OracleBudget):
        self.net = net
        self.budget = budget
        self.kernel = kernel_for(net)
        self.updates = net.non_empty_updates
        self.n = len(self.updates)
        self.all_mask = (1 << self.n) - 1
        self.valid_cache: dict[int, bool] = {}
        self.memo_fail: dict[int, int] = {}
        self.started = time.monotonic()
        self.deadline = self.started + budget.time_limit
        self._tick = 0

        self.prep_mask = 0
        self.flip_bits: list[int] = []
        for bit, u in enumerate(self.updates):
            old = net.old_out_edge(u.pair, u.vertex)
            new = net.new_out_edge(u.pair, u.vertex)
            if old is None and new is not None:
                self.prep_mask |= 1 << bit
            elif old is not None and new is not None:
                self.flip_bits.append(bit)
            # deactivation-only updates take part in the round search but not
            # in the reachability game

    @property
    def explored(self) -> int:
        return len(self.valid_cache)

    def elapsed(self) -> float:
        return time.monotonic() - self.started

    def valid(self, mask: int) -> bool:
        v = self.valid_cache.get(mask)
        if v is None:
            self._tick += 1
            if len(self.valid_cache) >= self.budget.max_states or (
                self._tick & 0x3FF == 0 and time.monotonic() > self.deadline
            ):
                raise _BudgetExceeded
            v = self.kernel.check(mask)[0] == OK
            self.valid_cache[mask] = v
        return v

    # -- feasibility --------------------------------------------------------

    def feasible(self) -> bool:
        """Reachability of the all-flips state over valid single-flip steps."""
        full = 0
        for b in self.flip_bits:
            full |= 1 << b
        if full == 0:
            return True
        seen = {0}
        stack = [0]
        while stack:
            sub = stack.pop()
            if sub == full:
                return True
            for b in self.flip_bits:
                bit = 1 << b
                if sub & bit:
                    continue
                nxt = sub | bit
                if nxt not in seen and self.valid(self.prep_mask | nxt):
                    seen.add(nxt)
                    stack.append(nxt)
        return full in seen

    # -- minimum rounds -----------------------------------------------------

    def _all_subsets_valid(self, base: int, sub: int) -> bool:
        t = sub
        while True:
            if not self.valid(base | t):
                return False
            if t == 0:
                return True
            t = (t - 1) & sub

    def _admissible_layers(self, mask: int, rem: int):
        """Admissible candidate rounds, by size then lexicographic order."""
        singles = [b for b in range(self.n) if (rem >> b) & 1 and self.valid(mask | (1 << b))]
        layer = [(1 << b, i) for i, b in enumerate(singles)]
        while layer:
            yield [sub for sub, _ in layer]
            nxt = []
            for sub, mx in layer:
                for i in range(mx + 1, len(singles)):
                    bit = 1 << singles[i]
                    ok = True
                    t = sub
                    while True:
                        if not self.valid(mask | t | bit):
                            ok = False
                            break
                        if t == 0:
                            break
                        t = (t - 1) & sub
                    if ok:
                        nxt.append((sub | bit, i))
            layer = nxt

    def dfs(self, mask: int, rounds_left: int) -> Optional[list[int]]:
        rem = self.all_mask & ~mask
        if rem == 0:
            return []
        if rounds_left <= 0 or self.memo_fail.get(mask, 0) >= rounds_left:
            return None
        if rounds_left == 1:
            if self._all_subsets_valid(mask, rem):
                return [rem]
            self.memo_fail[mask] = max(self.memo_fail.get(mask, 0), rounds_left)
            return None
        for layer in self._admissible_layers(mask, rem):
            for sub in layer:
                res = self.dfs(mask | sub, rounds_left - 1)
                if res is not None:
                    return [sub] + res
        self.memo_fail[mask] = max(self.memo_fail.get(mask, 0), rounds_left)
        return None

    def to_sequence(self, round_masks: list[int]) -> UpdateSequence:
        rounds = []
        for sub in round_masks:
            rounds.append(
                frozenset(self.updates[b] for b in range(self.n) if (sub >> b) & 1)
            )
        return tuple(rounds)


def min_rounds(net: UpdateFlowNetwork, budget: OracleBudget = OracleBudget()) -> OracleResult:
    """Minimum-round valid sequence, a proof of infeasibility, or budget out.

    Iterative deepening on the round count; the first sequence found under the
    deterministic enumeration order is returned.
    """
    n = len(net.non_empty_updates)
    if n > budget.max_updates:
        raise TooManyUpdatesError(
            f"{n} non-empty updates exceed the oracle budget of {budget.max_updates}"
        )
    if n == 0:
        return OracleResult(status="optimal", sequence=(), rounds=0)
    search = _Search(net, budget)
    try:
        if not search.feasible():
            return OracleResult(
                status="infeasible",
                explored_states=search.explored,
                elapsed=search.elapsed(),
            )
        for ell in range(1, n + 1):
            res = search.dfs(0, ell)
            if res is not None:
                return OracleResult(
                    status="optimal",
                    sequence=search.to_sequence(res),
                    rounds=ell,
                    explored_states=search.explored,
                    elapsed=search.elapsed(),
                )
        raise AssertionError("feasible instance must admit a singleton sequence")
    except _BudgetExceeded:
        return OracleResult(
            status="budget-exhausted",
            explored_states=search.explored,
            elapsed=search.elapsed(),
        )


def enumerate_valid_sequences(
    net: UpdateFlowNetwork,
    max_rounds: int,
    limit: int,
    max_updates: int = 12,
    budget: OracleBudget = OracleBudget(),
) -> list[UpdateSequence]:
    """Up to ``limit`` valid sequences with at most ``max_rounds`` rounds,
    in deterministic depth-first order.  Every returned sequence is valid."""
    n = len(net.non_empty_updates)
    if n > max_updates:
        raise TooManyUpdatesError(f"{n} non-empty updates exceed the cap of {max_updates}")
    if n == 0:
        return [()] if limit > 0 else []
    search = _Search(net, budget)
    found: list[list[int]] = []

    def walk(mask: int, prefix: list[int]) -> None:
        if len(found) >= limit:
            return
        rem = search.all_mask & ~mask
        if rem == 0:
            found.append(list(prefix))
            return
        if len(prefix) >= max_rounds:
            return
        for layer in search._admissible_layers(mask, rem):
            for sub in layer:
                if len(found) >= limit:
                    return
                prefix.append(sub)
                walk(mask | sub, prefix)
                prefix.pop()

    try:
        walk(0, [])
    except _BudgetExceeded:
        pass
    return [search.to_sequence(masks) for masks in found]
