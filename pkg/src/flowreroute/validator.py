"""The trusted schedule checker.

A state (set of resolved updates) is valid when every pair still has a unique
transient s-t path and the transient paths together respect all capacities.
A sequence is valid when, for every round, *every subset* of that round on top
of all earlier rounds leaves a valid state; this models asynchronous rule
installation inside a round.  Subset checking is exhaustive by design: it is
the definitionally faithful oracle every scheduler here is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional

from ._kernel import kernel_for
from ._kernel_py import CAPACITY, NO_TRANSIENT, NON_UNIQUE, OK
from .errors import RoundTooLargeError, ScheduleFormatError
from .model import Update, UpdateFlowNetwork, UpdateSequence, check_partition

#: Guard for the 2^|round| subset enumeration.
DEFAULT_SUBSET_CAP = 20


@dataclass(frozen=True)
class FailureReason:
    kind: str  # "no-transient-flow" | "non-unique-transient-flow" | "capacity-violation"
    pair: Optional[int] = None
    edge: Optional[tuple[str, str]] = None

    def __str__(self) -> str:
        if self.kind == "capacity-violation":
            return f"capacity-violation{self.edge}"
        return f"{self.kind}(pair {self.pair})"


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    failing_round: Optional[int] = None  # 1-based
    failing_subset: Optional[frozenset[Update]] = None
    reason: Optional[FailureReason] = None

    def __bool__(self) -> bool:
        return self.valid


def _reason(net: UpdateFlowNetwork, code: int, arg: int) -> FailureReason:
    if code == NO_TRANSIENT:
        return FailureReason("no-transient-flow", pair=net.pairs[arg].id)
    if code == NON_UNIQUE:
        return FailureReason("non-unique-transient-flow", pair=net.pairs[arg].id)
    if code == CAPACITY:
        return FailureReason("capacity-violation", edge=net.edge_name(arg))
    raise AssertionError(code)


def check_state(net: UpdateFlowNetwork, resolved: Iterable[Update]) -> ValidationReport:
    """Is the state after resolving exactly ``resolved`` consistent?

    ``resolved`` must consist of non-empty updates of ``net``.
    """
    mask = net.updates_mask(resolved)
    code, arg = kernel_for(net).check(mask)
    if code == OK:
        return ValidationReport(valid=True)
    return ValidationReport(valid=False, reason=_reason(net, code, arg))


def validate_sequence(
    net: UpdateFlowNetwork,
    seq: UpdateSequence,
    subset_cap: int = DEFAULT_SUBSET_CAP,
) -> ValidationReport:
    """Exhaustively check the consistency rule for every round of ``seq``.

    The first failure is reported deterministically: rounds in order, subsets
    by size and then lexicographically in the canonical update order.
    """
    check_partition(net, seq)
    for i, rnd in enumerate(seq):
        if len(rnd) > subset_cap:
            raise RoundTooLargeError(
                f"round {i + 1} has {len(rnd)} updates; subset checking is capped at "
                f"{subset_cap} (raise subset_cap to force it)"
            )
    kernel = kernel_for(net)
    prefix_mask = 0
    verdicts: dict[int, tuple[int, int]] = {}
    for i, rnd in enumerate(seq):
        ordered = sorted(rnd, key=net.update_key)
        bits = [1 << net.update_bit(u) for u in ordered]
        for size in range(len(ordered) + 1):
            for subset in combinations(range(len(ordered)), size):
                mask = prefix_mask
                for j in subset:
                    mask |= bits[j]
                verdict = verdicts.get(mask)
                if verdict is None:
                    verdict = kernel.check(mask)
                    verdicts[mask] = verdict
                code, arg = verdict
                if code != OK:
                    return ValidationReport(
                        valid=False,
                        failing_round=i + 1,
                        failing_subset=frozenset(ordered[j] for j in subset),
                        reason=_reason(net, code, arg),
                    )
        for b in bits:
            prefix_mask |= b
    return ValidationReport(valid=True)


def final_state_routes_new_paths(net: UpdateFlowNetwork, seq: UpdateSequence) -> bool:
    """After a full valid sequence every transient equals the pair's new path."""
    from .model import transient_flow

    resolved = [u for rnd in seq for u in rnd]
    return all(
        transient_flow(net, p.id, resolved) == p.new_path for p in net.pairs
    )


def sequence_or_raise(net: UpdateFlowNetwork, seq: UpdateSequence, subset_cap: int = DEFAULT_SUBSET_CAP) -> None:
    report = validate_sequence(net, seq, subset_cap=subset_cap)
    if not report.valid:
        raise ScheduleFormatError(
            f"sequence invalid at round {report.failing_round}: {report.reason}"
        )
