"""Block decomposition, dependency graph and the two-flow schedulers.

For a pair whose old/new union is a DAG, the differing segments between
consecutive vertices shared by both paths are its *blocks*.  A block of one
pair *requires* a block of the other pair when its new segment needs capacity
still held by the other's old segment.  Scheduling then reduces to repeatedly
updating the dependency sinks; doing it with overlapping three-round windows
(prepare new rules, flip the block start, clean old rules) yields a shortest
schedule, in linear time.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .errors import NotADagError, WrongPairCountError
from .model import Update, UpdateFlowNetwork, UpdateSequence

#: (pair id, block index) - stable identity of a block within its network.
BlockKey = tuple[int, int]


@dataclass(frozen=True)
class Block:
    pair: int  # pair id
    index: int  # ordinal within the pair, 0-based
    start: str
    end: str
    old_edges: tuple[tuple[str, str], ...]
    new_edges: tuple[tuple[str, str], ...]

    @property
    def key(self) -> BlockKey:
        return (self.pair, self.index)

    @property
    def new_interior(self) -> tuple[str, ...]:
        """Vertices whose new out-edge lies inside the block (need preparing)."""
        return tuple(head for _, head in self.new_edges[:-1])

    @property
    def old_interior(self) -> tuple[str, ...]:
        """Vertices whose old out-edge lies inside the block (need cleanup)."""
        return tuple(head for _, head in self.old_edges[:-1])

    def updates(self) -> tuple[frozenset[Update], frozenset[Update], frozenset[Update]]:
        """(prepare, flip, cleanup) update sets of this block."""
        return (
            frozenset(Update(v, self.pair) for v in self.new_interior),
            frozenset({Update(self.start, self.pair)}),
            frozenset(Update(v, self.pair) for v in self.old_interior),
        )


@dataclass(frozen=True)
class DependencyGraph:
    nodes: tuple[Block, ...]
    edges: frozenset[tuple[BlockKey, BlockKey]]
    # one network edge witnessing each dependency (used to break cycles)
    witnesses: tuple[tuple[tuple[BlockKey, BlockKey], tuple[str, str]], ...] = ()

    def block(self, key: BlockKey) -> Block:
        for b in self.nodes:
            if b.key == key:
                return b
        raise KeyError(key)

    def has_cycle(self) -> bool:
        return sink_batches(self) is None


def pair_topological_order(net: UpdateFlowNetwork, pair_id: int) -> tuple[str, ...]:
    """Deterministic topological order of the pair's old/new union."""
    pair = net.pair_by_id(pair_id)
    order = _kahn(net, [pair.old_path, pair.new_path])
    if order is None:
        raise NotADagError(f"pair {pair_id}: old/new union has a directed cycle")
    return order


def _kahn(net: UpdateFlowNetwork, paths: list[tuple[str, ...]]) -> Optional[tuple[str, ...]]:
    verts: list[str] = []
    seen: set[str] = set()
    adj: dict[str, list[str]] = {}
    indeg: dict[str, int] = {}
    edge_seen: set[tuple[str, str]] = set()
    for path in paths:
        for v in path:
            if v not in seen:
                seen.add(v)
                verts.append(v)
                indeg.setdefault(v, 0)
        for e in zip(path, path[1:]):
            if e not in edge_seen:
                edge_seen.add(e)
                adj.setdefault(e[0], []).append(e[1])
                indeg[e[1]] = indeg.get(e[1], 0) + 1
    ready = deque(v for v in verts if indeg[v] == 0)
    order: list[str] = []
    while ready:
        v = ready.popleft()
        order.append(v)
        for w in adj.get(v, ()):
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    if len(order) != len(verts):
        return None
    return tuple(order)


def vertex_ranking(net: UpdateFlowNetwork) -> dict[str, int]:
    """A total vertex rank used for block comparisons across pairs.

    Topological over the union of all pairs when that union is acyclic,
    otherwise plain registration order.
    """
    paths = [p for pair in net.pairs for p in (pair.old_path, pair.new_path)]
    order = _kahn(net, paths)
    if order is None:
        order = tuple(v for v in net.vertices)
    rank = {v: i for i, v in enumerate(order)}
    for v in net.vertices:  # vertices on no pair still need a rank
        rank.setdefault(v, len(rank))
    return rank


def decompose_blocks(net: UpdateFlowNetwork, pair_id: int) -> list[Block]:
    """Blocks of the pair, in start-vertex order along the paths.

    Differing old/new segments between consecutive shared vertices; segments
    where both paths coincide are not blocks (their updates are empty).
    """
    pair = net.pair_by_id(pair_id)
    old, new = pair.old_path, pair.new_path
    shared = set(old) & set(new)
    shared_old = [v for v in old if v in shared]
    shared_new = [v for v in new if v in shared]
    if shared_old != shared_new:
        # both paths visit the shared vertices, so disagreeing orders force a
        # directed cycle in the union (and agreement forces acyclicity)
        raise NotADagError(f"pair {pair_id}: old/new union has a directed cycle")

    def segments(path: tuple[str, ...]) -> list[list[str]]:
        segs, cur = [], [path[0]]
        for v in path[1:]:
            cur.append(v)
            if v in shared:
                segs.append(cur)
                cur = [v]
        return segs

    blocks: list[Block] = []
    for old_seg, new_seg in zip(segments(old), segments(new)):
        if old_seg == new_seg:
            continue
        blocks.append(
            Block(
                pair=pair_id,
                index=len(blocks),
                start=old_seg[0],
                end=old_seg[-1],
                old_edges=tuple(zip(old_seg, old_seg[1:])),
                new_edges=tuple(zip(new_seg, new_seg[1:])),
            )
        )
    return blocks


def compare_blocks(b1: Block, b2: Block, ranking: dict[str, int]) -> int:
    """Total block order: start precedence, then end precedence, then pair."""
    k1 = (ranking[b1.start], ranking[b1.end], b1.pair, b1.index)
    k2 = (ranking[b2.start], ranking[b2.end], b2.pair, b2.index)
    return -1 if k1 < k2 else (1 if k1 > k2 else 0)


def block_sort_key(net: UpdateFlowNetwork):
    ranking = vertex_ranking(net)
    return lambda b: (ranking[b.start], ranking[b.end], b.pair, b.index)


def build_dependency_graph(net: UpdateFlowNetwork) -> DependencyGraph:
    """Blocks as nodes; b1 -> b2 when b1's new segment waits on b2's old one."""
    if len(net.pairs) != 2:
        raise WrongPairCountError(f"need exactly 2 pairs, got {len(net.pairs)}")
    per_pair = {p.id: decompose_blocks(net, p.id) for p in net.pairs}
    nodes = sorted(
        (b for blocks in per_pair.values() for b in blocks), key=block_sort_key(net)
    )
    edges: set[tuple[BlockKey, BlockKey]] = set()
    witnesses: dict[tuple[BlockKey, BlockKey], tuple[str, str]] = {}
    demand = {p.id: p.demand for p in net.pairs}
    for me, other in ((net.pairs[0], net.pairs[1]), (net.pairs[1], net.pairs[0])):
        old_owner: dict[tuple[str, str], BlockKey] = {}
        for b in per_pair[other.id]:
            for e in b.old_edges:
                old_owner[e] = b.key
        limit = demand[me.id] + demand[other.id]
        for b in per_pair[me.id]:
            for e in b.new_edges:
                owner = old_owner.get(e)
                if owner is not None and net.capacity(*e) < limit:
                    dep = (b.key, owner)
                    if dep not in edges:
                        edges.add(dep)
                        witnesses[dep] = e
    return DependencyGraph(
        nodes=tuple(nodes),
        edges=frozenset(edges),
        witnesses=tuple(sorted(witnesses.items())),
    )


def sink_batches(dep: DependencyGraph) -> Optional[list[list[Block]]]:
    """Peel dependency sinks in waves; None when the graph has a cycle."""
    pos = {b.key: i for i, b in enumerate(dep.nodes)}
    outdeg = [0] * len(dep.nodes)
    preds: list[list[int]] = [[] for _ in dep.nodes]
    for frm, to in dep.edges:
        outdeg[pos[frm]] += 1
        preds[pos[to]].append(pos[frm])
    batch = [i for i, d in enumerate(outdeg) if d == 0]
    batches: list[list[Block]] = []
    removed = 0
    while batch:
        batches.append([dep.nodes[i] for i in batch])
        removed += len(batch)
        nxt: list[int] = []
        for i in batch:
            for p in preds[i]:
                outdeg[p] -= 1
                if outdeg[p] == 0:
                    nxt.append(p)
        batch = sorted(nxt)
    if removed != len(dep.nodes):
        return None
    return batches


def _materialize(rounds: dict[int, set[Update]]) -> UpdateSequence:
    return tuple(
        frozenset(rounds[r]) for r in sorted(rounds) if rounds[r]
    )


def schedule_feasible(net: UpdateFlowNetwork) -> Optional[UpdateSequence]:
    """Sink-batch updating with disjoint three-round windows per batch.

    None when the dependency graph is cyclic (no feasible sequence exists).
    """
    dep = build_dependency_graph(net)
    batches = sink_batches(dep)
    if batches is None:
        return None
    rounds: dict[int, set[Update]] = {}
    for k, batch in enumerate(batches):
        base = 3 * k
        for b in batch:
            prep, flip, clean = b.updates()
            rounds.setdefault(base + 1, set()).update(prep)
            rounds.setdefault(base + 2, set()).update(flip)
            rounds.setdefault(base + 3, set()).update(clean)
    return _materialize(rounds)


def schedule_optimal(net: UpdateFlowNetwork) -> Optional[UpdateSequence]:
    """A shortest valid sequence, or None when the dependency graph is cyclic.

    Batch k of dependency sinks is scheduled in rounds (i-1, i, i+1) with the
    block starts flipped in round i, and i advances by one per batch, so the
    cleanup round of one batch is shared with the flips of the next.
    """
    dep = build_dependency_graph(net)
    batches = sink_batches(dep)
    if batches is None:
        return None
    rounds: dict[int, set[Update]] = {}
    i = 2 if batches and any(b.new_interior for b in batches[0]) else 1
    for batch in batches:
        for b in batch:
            prep, flip, clean = b.updates()
            rounds.setdefault(i - 1, set()).update(prep)
            rounds.setdefault(i, set()).update(flip)
            rounds.setdefault(i + 1, set()).update(clean)
        i += 1
    return _materialize(rounds)


def block_round_lower_bound(b: Block) -> int:
    """Rounds needed for this block alone: prep and cleanup only exist when
    the corresponding segment has at least two edges."""
    if len(b.old_edges) >= 2 and len(b.new_edges) >= 2:
        return 3
    if len(b.old_edges) >= 2 or len(b.new_edges) >= 2:
        return 2
    return 1


def format_dependency_trace(net: UpdateFlowNetwork) -> str:
    """Human-readable dump of the block decomposition and dependency graph."""
    dep = build_dependency_graph(net)
    lines = ["blocks:"]
    for b in dep.nodes:
        lines.append(
            f"  pair {b.pair} block {b.index}: {b.start} -> {b.end}"
            f" old={list(b.old_edges)} new={list(b.new_edges)}"
        )
    lines.append("dependencies:")
    if not dep.edges:
        lines.append("  (none)")
    for frm, to in sorted(dep.edges):
        lines.append(f"  pair {frm[0]} block {frm[1]} -> pair {to[0]} block {to[1]}")
    lines.append("cyclic: " + ("yes" if dep.has_cycle() else "no"))
    return "\n".join(lines) + "\n"
