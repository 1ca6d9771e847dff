"""Update flow networks and their rerouting semantics.

An instance is a capacitated digraph with one source and one terminal plus a
family of flow pairs.  Each pair routes a fixed demand along an *old* simple
s-t path and must end up on a *new* simple s-t path.  A vertex is switched per
pair: once the update (v, P) is resolved, v forwards P along its new out-edge
instead of its old one.  Everything downstream (validation, scheduling, the
exhaustive oracle) is defined in terms of the per-pair active-edge graphs
induced by a set of resolved updates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .errors import InstanceFormatError, InvariantViolation, ScheduleFormatError


@dataclass(frozen=True)
class FlowPair:
    """One flow with its old path, new path and demand."""

    id: int
    old_path: tuple[str, ...]
    new_path: tuple[str, ...]
    demand: int


@dataclass(frozen=True)
class Update:
    """Switching vertex ``vertex``'s forwarding for pair ``pair`` (a pair id)."""

    vertex: str
    pair: int


#: A schedule: an ordered partition of the non-empty updates into rounds.
UpdateSequence = tuple[frozenset[Update], ...]


@dataclass(frozen=True)
class ActiveGraph:
    """Per-pair active edge sets under a given resolved-update set."""

    edges: Mapping[int, frozenset[tuple[str, str]]]

    def for_pair(self, pair_id: int) -> frozenset[tuple[str, str]]:
        return self.edges[pair_id]


class UpdateFlowNetwork:
    """A validated update flow network.

    Immutable after construction; all operations on it are pure functions.
    Vertex ids are opaque strings; internally they are mapped to dense
    integers (registration order) so the schedulers stay linear-time.
    """

    def __init__(
        self,
        vertices: Sequence[str],
        edges: Mapping[tuple[str, str], int],
        source: str,
        terminal: str,
        pairs: Sequence[FlowPair],
    ):
        self.vertices: tuple[str, ...] = tuple(vertices)
        self.source = source
        self.terminal = terminal
        self.pairs: tuple[FlowPair, ...] = tuple(pairs)

        if len(set(self.vertices)) != len(self.vertices):
            raise InvariantViolation("duplicate vertex ids")
        self._vindex = {v: i for i, v in enumerate(self.vertices)}

        self._edge_list: list[tuple[str, str]] = []
        self._eindex: dict[tuple[str, str], int] = {}
        self._caps: list[int] = []
        for (tail, head), cap in edges.items():
            if tail == head:
                raise InvariantViolation(f"self-loop on vertex {tail!r}")
            if tail not in self._vindex or head not in self._vindex:
                raise InvariantViolation(f"edge ({tail}, {head}) uses an undeclared vertex")
            if not isinstance(cap, int) or cap < 0:
                raise InvariantViolation(f"edge ({tail}, {head}) needs a non-negative integer capacity")
            if (tail, head) in self._eindex:
                raise InvariantViolation(f"parallel edge ({tail}, {head})")
            self._eindex[(tail, head)] = len(self._edge_list)
            self._edge_list.append((tail, head))
            self._caps.append(cap)

        self._validate_endpoints()
        self._index_pairs()
        self._validate_pairs()
        self._collect_updates()
        self._kernel_cache: dict[str, object] = {}

    # -- construction-time validation -------------------------------------

    def _validate_endpoints(self) -> None:
        if self.source == self.terminal:
            raise InvariantViolation("source and terminal must differ")
        for name, v in (("source", self.source), ("terminal", self.terminal)):
            if v not in self._vindex:
                raise InvariantViolation(f"{name} {v!r} is not a declared vertex")

    def _index_pairs(self) -> None:
        ids = [p.id for p in self.pairs]
        if len(set(ids)) != len(ids):
            raise InvariantViolation("duplicate pair ids")
        self._pair_pos = {p.id: i for i, p in enumerate(self.pairs)}
        # per (pair position, vertex index): outgoing old/new edge id, -1 if none
        n = len(self.vertices)
        self._old_out = [[-1] * n for _ in self.pairs]
        self._new_out = [[-1] * n for _ in self.pairs]

    def _path_edges(self, pair: FlowPair, path: tuple[str, ...], label: str) -> list[int]:
        if len(path) < 2 or path[0] != self.source or path[-1] != self.terminal:
            raise InvariantViolation(
                f"pair {pair.id}: {label} must run from {self.source!r} to {self.terminal!r}"
            )
        if len(set(path)) != len(path):
            raise InvariantViolation(f"pair {pair.id}: {label} is not a simple path")
        eids = []
        for tail, head in zip(path, path[1:]):
            eid = self._eindex.get((tail, head))
            if eid is None:
                raise InvariantViolation(f"pair {pair.id}: {label} uses missing edge ({tail}, {head})")
            if self._caps[eid] < pair.demand:
                raise InvariantViolation(
                    f"pair {pair.id}: edge ({tail}, {head}) has capacity below demand {pair.demand}"
                )
            eids.append(eid)
        return eids

    def _validate_pairs(self) -> None:
        self._old_edges: list[list[int]] = []
        self._new_edges: list[list[int]] = []
        for pos, pair in enumerate(self.pairs):
            if not isinstance(pair.demand, int) or pair.demand <= 0:
                raise InvariantViolation(f"pair {pair.id}: demand must be a positive integer")
            old = self._path_edges(pair, pair.old_path, "old_path")
            new = self._path_edges(pair, pair.new_path, "new_path")
            self._old_edges.append(old)
            self._new_edges.append(new)
            for path, out in ((pair.old_path, self._old_out[pos]), (pair.new_path, self._new_out[pos])):
                for tail, head in zip(path, path[1:]):
                    out[self._vindex[tail]] = self._eindex[(tail, head)]
        # both endpoint states must respect capacities: the old family is the
        # initial state, the new family is the forced final state
        for label, per_pair in (("initial", self._old_edges), ("final", self._new_edges)):
            loads = [0] * len(self._edge_list)
            for pos, pair in enumerate(self.pairs):
                for eid in per_pair[pos]:
                    loads[eid] += pair.demand
            for eid, load in enumerate(loads):
                if load > self._caps[eid]:
                    tail, head = self._edge_list[eid]
                    raise InvariantViolation(
                        f"{label} loads exceed capacity on edge ({tail}, {head})"
                    )

    def _collect_updates(self) -> None:
        ups: list[Update] = []
        for pos, pair in enumerate(self.pairs):
            old_out = self._old_out[pos]
            new_out = self._new_out[pos]
            on_pair = sorted(
                {self._vindex[v] for v in pair.old_path} | {self._vindex[v] for v in pair.new_path}
            )
            for vi in on_pair:
                if old_out[vi] != new_out[vi]:
                    ups.append(Update(self.vertices[vi], pair.id))
        self.non_empty_updates: tuple[Update, ...] = tuple(ups)
        self._update_bit = {u: i for i, u in enumerate(ups)}

    # -- basic accessors ---------------------------------------------------

    @property
    def edges(self) -> dict[tuple[str, str], int]:
        return {e: c for e, c in zip(self._edge_list, self._caps)}

    def capacity(self, tail: str, head: str) -> int:
        return self._caps[self._eindex[(tail, head)]]

    def pair_by_id(self, pair_id: int) -> FlowPair:
        return self.pairs[self._pair_pos[pair_id]]

    def vertex_index(self, v: str) -> int:
        return self._vindex[v]

    def update_key(self, u: Update):
        """Canonical order of updates: pair position, then vertex registration."""
        return (self._pair_pos[u.pair], self._vindex[u.vertex])

    def update_bit(self, u: Update) -> int:
        try:
            return self._update_bit[u]
        except KeyError:
            raise InvariantViolation(f"{u} is not a non-empty update of this network") from None

    def old_out_edge(self, pair_id: int, vertex: str) -> Optional[tuple[str, str]]:
        eid = self._old_out[self._pair_pos[pair_id]][self._vindex[vertex]]
        return None if eid < 0 else self._edge_list[eid]

    def new_out_edge(self, pair_id: int, vertex: str) -> Optional[tuple[str, str]]:
        eid = self._new_out[self._pair_pos[pair_id]][self._vindex[vertex]]
        return None if eid < 0 else self._edge_list[eid]

    def __eq__(self, other) -> bool:
        if not isinstance(other, UpdateFlowNetwork):
            return NotImplemented
        return (
            set(self.vertices) == set(other.vertices)
            and self.edges == other.edges
            and self.source == other.source
            and self.terminal == other.terminal
            and sorted(self.pairs, key=lambda p: p.id) == sorted(other.pairs, key=lambda p: p.id)
        )

    def __repr__(self) -> str:
        return (
            f"UpdateFlowNetwork(|V|={len(self.vertices)}, |E|={len(self._edge_list)}, "
            f"pairs={len(self.pairs)})"
        )

    # -- kernel plumbing ---------------------------------------------------

    def kernel_tables(self) -> dict:
        """Flat integer tables consumed by the state-evaluation kernels."""
        n = len(self.vertices)
        flat_old = [eid for row in self._old_out for eid in row]
        flat_new = [eid for row in self._new_out for eid in row]
        upd_bit = [-1] * (len(self.pairs) * n)
        for u, bit in self._update_bit.items():
            upd_bit[self._pair_pos[u.pair] * n + self._vindex[u.vertex]] = bit
        return {
            "n_vertices": n,
            "source": self._vindex[self.source],
            "terminal": self._vindex[self.terminal],
            "edge_heads": [self._vindex[h] for (_, h) in self._edge_list],
            "capacities": list(self._caps),
            "demands": [p.demand for p in self.pairs],
            "old_out": flat_old,
            "new_out": flat_new,
            "update_bits": upd_bit,
            "n_updates": len(self.non_empty_updates),
        }

    def edge_name(self, eid: int) -> tuple[str, str]:
        return self._edge_list[eid]

    def updates_mask(self, resolved: Iterable[Update]) -> int:
        mask = 0
        for u in resolved:
            mask |= 1 << self.update_bit(u)
        return mask


# -- semantics ---------------------------------------------------------------


def is_empty_update(net: UpdateFlowNetwork, upd: Update) -> bool:
    """True iff resolving ``upd`` can never change any transient flow."""
    pair = net.pair_by_id(upd.pair)
    if upd.vertex not in pair.old_path and upd.vertex not in pair.new_path:
        raise InvariantViolation(f"vertex {upd.vertex!r} is not on pair {upd.pair}")
    return net.old_out_edge(upd.pair, upd.vertex) == net.new_out_edge(upd.pair, upd.vertex)


def active_edges(net: UpdateFlowNetwork, resolved: Iterable[Update]) -> ActiveGraph:
    """The per-pair active edge sets under ``resolved``.

    An edge (u, v) of a pair is active iff it is an old edge and (u, P) is
    unresolved, or a new edge and (u, P) is resolved; edges on both paths are
    active either way.
    """
    resolved_set = set(resolved)
    for u in resolved_set:
        net.pair_by_id(u.pair)  # raises KeyError-ish on unknown pair
        pair = net.pair_by_id(u.pair)
        if u.vertex not in pair.old_path and u.vertex not in pair.new_path:
            raise InvariantViolation(f"vertex {u.vertex!r} is not on pair {u.pair}")
    per_pair = {}
    for pair in net.pairs:
        active: set[tuple[str, str]] = set()
        for tail, head in zip(pair.old_path, pair.old_path[1:]):
            if Update(tail, pair.id) not in resolved_set:
                active.add((tail, head))
        for tail, head in zip(pair.new_path, pair.new_path[1:]):
            if Update(tail, pair.id) in resolved_set:
                active.add((tail, head))
        per_pair[pair.id] = frozenset(active)
    return ActiveGraph(per_pair)


def transient_flow(
    net: UpdateFlowNetwork, pair_id: int, resolved: Iterable[Update]
) -> Optional[tuple[str, ...]]:
    """The unique active s-t path of the pair, or None if there is no path.

    Uniqueness is taken over simple s-t paths in the pair's active edge set;
    with zero such paths or two or more, there is no transient flow.
    """
    active = active_edges(net, resolved).for_pair(pair_id)
    adj: dict[str, list[str]] = {}
    for tail, head in sorted(active):
        adj.setdefault(tail, []).append(head)

    found: list[tuple[str, ...]] = []

    def dfs(v: str, trail: list[str]) -> None:
        if len(found) >= 2:
            return
        if v == net.terminal:
            found.append(tuple(trail))
            return
        for nxt in adj.get(v, ()):
            if nxt not in trail:
                trail.append(nxt)
                dfs(nxt, trail)
                trail.pop()

    dfs(net.source, [net.source])
    return found[0] if len(found) == 1 else None


# -- instance and schedule documents ------------------------------------------


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InstanceFormatError(msg)


def load_instance(text: str) -> UpdateFlowNetwork:
    """Parse and validate an instance document (JSON)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON (line {exc.lineno}, column {exc.colno})") from exc
    return instance_from_dict(doc)


def instance_from_dict(doc: dict) -> UpdateFlowNetwork:
    _require(isinstance(doc, dict), "instance document must be an object")
    for field in ("vertices", "edges", "source", "terminal", "pairs"):
        _require(field in doc, f"missing field {field!r}")
    _require(
        isinstance(doc["vertices"], list) and all(isinstance(v, str) for v in doc["vertices"]),
        "field 'vertices' must be a list of strings",
    )
    edges: dict[tuple[str, str], int] = {}
    _require(isinstance(doc["edges"], list), "field 'edges' must be a list")
    for i, e in enumerate(doc["edges"]):
        _require(
            isinstance(e, dict) and {"tail", "head", "capacity"} <= set(e),
            f"edges[{i}]: need tail/head/capacity",
        )
        _require(isinstance(e["capacity"], int), f"edges[{i}].capacity must be an integer")
        key = (e["tail"], e["head"])
        _require(key not in edges, f"edges[{i}]: duplicate edge {key}")
        edges[key] = e["capacity"]
    pairs = []
    _require(isinstance(doc["pairs"], list), "field 'pairs' must be a list")
    for i, p in enumerate(doc["pairs"]):
        _require(
            isinstance(p, dict) and {"id", "old_path", "new_path", "demand"} <= set(p),
            f"pairs[{i}]: need id/old_path/new_path/demand",
        )
        _require(isinstance(p["id"], int), f"pairs[{i}].id must be an integer")
        _require(isinstance(p["demand"], int), f"pairs[{i}].demand must be an integer")
        for side in ("old_path", "new_path"):
            _require(
                isinstance(p[side], list) and all(isinstance(v, str) for v in p[side]),
                f"pairs[{i}].{side} must be a list of vertex ids",
            )
        pairs.append(
            FlowPair(p["id"], tuple(p["old_path"]), tuple(p["new_path"]), p["demand"])
        )
    return UpdateFlowNetwork(doc["vertices"], edges, doc["source"], doc["terminal"], pairs)


def serialize_instance(net: UpdateFlowNetwork) -> str:
    """Canonical serialization: sorted keys, sorted vertices/edges, pairs by id."""
    doc = {
        "vertices": sorted(net.vertices),
        "edges": [
            {"tail": t, "head": h, "capacity": c}
            for (t, h), c in sorted(net.edges.items())
        ],
        "source": net.source,
        "terminal": net.terminal,
        "pairs": [
            {
                "id": p.id,
                "old_path": list(p.old_path),
                "new_path": list(p.new_path),
                "demand": p.demand,
            }
            for p in sorted(net.pairs, key=lambda p: p.id)
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def load_schedule(net: UpdateFlowNetwork, text: str) -> UpdateSequence:
    """Parse a schedule document and check it partitions the non-empty updates."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScheduleFormatError(f"not valid JSON (line {exc.lineno}, column {exc.colno})") from exc
    if not isinstance(doc, dict) or "rounds" not in doc or not isinstance(doc["rounds"], list):
        raise ScheduleFormatError("schedule document must be an object with a 'rounds' list")
    rounds: list[frozenset[Update]] = []
    for i, rnd in enumerate(doc["rounds"]):
        if not isinstance(rnd, list) or not rnd:
            raise ScheduleFormatError(f"rounds[{i}] must be a non-empty list")
        ups = set()
        for j, item in enumerate(rnd):
            if not isinstance(item, dict) or {"vertex", "pair"} - set(item):
                raise ScheduleFormatError(f"rounds[{i}][{j}]: need vertex and pair")
            ups.add(Update(item["vertex"], item["pair"]))
        rounds.append(frozenset(ups))
    seq = tuple(rounds)
    check_partition(net, seq)
    return seq


def check_partition(net: UpdateFlowNetwork, seq: UpdateSequence) -> None:
    """Raise unless ``seq`` is an ordered partition of the non-empty updates."""
    seen: set[Update] = set()
    for i, rnd in enumerate(seq):
        if not rnd:
            raise ScheduleFormatError(f"round {i + 1} is empty")
        dup = rnd & seen
        if dup:
            u = min(dup, key=net.update_key)
            raise ScheduleFormatError(f"update ({u.vertex}, {u.pair}) appears in two rounds")
        seen |= rnd
    required = set(net.non_empty_updates)
    for u in seen - required:
        raise ScheduleFormatError(
            f"({u.vertex}, {u.pair}) is not a non-empty update of the instance"
        )
    missing = required - seen
    if missing:
        u = min(missing, key=net.update_key)
        raise ScheduleFormatError(f"schedule misses update ({u.vertex}, {u.pair})")


def serialize_schedule(net: UpdateFlowNetwork, seq: UpdateSequence) -> str:
    doc = {
        "rounds": [
            [
                {"vertex": u.vertex, "pair": u.pair}
                for u in sorted(rnd, key=net.update_key)
            ]
            for rnd in seq
        ]
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
