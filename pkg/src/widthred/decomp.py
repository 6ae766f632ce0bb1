"""Decomposition building blocks.

* ``eliminate``: G/S, survivors keep their identifiers.
* elimination schedules: a sequence of steps, each justified by one of four
  rules (single vertex, subset, matching, layered).  ``certify``
  simulates one, checks every side condition, and turns the per-vertex
  neighbourhoods into a tree decomposition.
* ``path_from_layout``: vertex-separation sweep over a linear order.
* ``normalize_nice``: nice form with exactly one IntroC per clause.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .instances import (
    CnfInstance, DecompNode, InstanceError, Kind, TreeDecomposition, UGraph,
    as_graph, decomposition_width, validate_decomposition,
)

SINGLE = "single"
SUBSET = "subset"
MATCHING = "matching"
LAYERED = "layered"
RULES = (SINGLE, SUBSET, MATCHING, LAYERED)


class ScheduleError(ValueError):
    pass


def eliminate(graph: UGraph, vertices: Iterable[int]) -> UGraph:
    """G/S: drop S and turn N(S) into a clique."""
    S = set(vertices)
    adj = graph.adjacency
    for v in S:
        if v not in adj:
            raise InstanceError(f"cannot eliminate unknown vertex {v}")
    boundary = set().union(*(adj[v] for v in S)) - S if S else set()
    edges = {(u, w) for u, w in graph.edges if u not in S and w not in S}
    edges.update((u, w) for u in boundary for w in boundary if u < w)
    return UGraph(graph.num_vertices, frozenset(edges), graph.is_target, graph.names,
                  vertex_set=frozenset(v for v in graph.vertices if v not in S))


def _eliminate_vertex(adj: dict[int, set[int]], v: int) -> set[int]:
    nbrs = adj.pop(v)
    for u in nbrs:
        s = adj[u]
        s.discard(v)
        s.update(nbrs)
        s.discard(u)
    return nbrs


@dataclass(frozen=True)
class EliminationStep:
    vertices: tuple[int, ...]
    rule: str = SUBSET
    claimed_degree: int | None = None
    partner: frozenset[int] = frozenset()      # Y for the matching rule
    layers: tuple[tuple[int, ...], ...] = ()   # S_1..S_d for the layered rule
    label: str = ""

    @staticmethod
    def layered(layers: Sequence[Sequence[int]], claimed: int | None = None, label=""):
        layers = tuple(tuple(l) for l in layers if l)
        flat = tuple(v for l in layers for v in l)
        return EliminationStep(flat, LAYERED, claimed, layers=layers, label=label)

    @staticmethod
    def matching(xs: Iterable[int], ys: Iterable[int], claimed: int | None = None, label=""):
        return EliminationStep(tuple(xs), MATCHING, claimed, partner=frozenset(ys), label=label)


@dataclass
class EliminationSchedule:
    steps: list[EliminationStep] = field(default_factory=list)

    def add(self, step: EliminationStep) -> None:
        if step.vertices:
            self.steps.append(step)

    def __iter__(self):
        return iter(self.steps)

    def __len__(self):
        return len(self.steps)


@dataclass
class ScheduleRun:
    degrees: list[int]            # lemma bound per step, evaluated on the live graph
    max_vertex_degree: int        # largest single-vertex degree actually met
    remainder: UGraph
    neighbourhoods: list[tuple[int, frozenset[int]]]


def _rule_bound(adj: dict[int, set[int]], step: EliminationStep, idx: int) -> int:
    S = step.vertices
    where = f"step {idx} ({step.rule}{' ' + step.label if step.label else ''})"
    if len(set(S)) != len(S):
        raise ScheduleError(f"{where}: repeated vertex")
    for v in S:
        if v not in adj:
            raise ScheduleError(f"{where}: vertex {v} is not in the current graph")
    sset = set(S)
    if step.rule == SINGLE:
        if len(S) != 1:
            raise ScheduleError(f"{where}: single rule takes exactly one vertex")
        return len(adj[S[0]])
    if step.rule == SUBSET:
        closed = set(sset)
        for v in S:
            closed |= adj[v]
        return len(closed) - 1
    if step.rule == MATCHING:
        ys = step.partner
        if sset & ys:
            raise ScheduleError(f"{where}: X and Y overlap")
        closed = set(sset)
        for v in S:
            hits = adj[v] & ys
            if len(hits) > 1:
                raise ScheduleError(f"{where}: vertex {v} has {len(hits)} neighbours in Y")
            closed |= adj[v]
        return len(closed - ys)
    if step.rule == LAYERED:
        layer_of = {}
        for a, layer in enumerate(step.layers):
            for v in layer:
                layer_of[v] = a
        if set(layer_of) != sset or sum(map(len, step.layers)) != len(S):
            raise ScheduleError(f"{where}: layers must partition the step's vertices")
        outside = set()
        for v in S:
            a = layer_of[v]
            for u in adj[v]:
                b = layer_of.get(u)
                if b is None:
                    outside.add(u)
                elif abs(a - b) > 1:
                    raise ScheduleError(f"{where}: edge {v}-{u} skips from layer {a + 1} to {b + 1}")
        k = max(len(l) for l in step.layers)
        return 2 * k + len(outside) - 1
    raise ScheduleError(f"{where}: unknown rule {step.rule!r}")


def _order(step: EliminationStep) -> Sequence[int]:
    if step.rule == LAYERED:
        return [v for layer in step.layers for v in layer]
    return step.vertices


def simulate_schedule(graph: UGraph, schedule: Iterable[EliminationStep]) -> ScheduleRun:
    adj = {v: set(ns) for v, ns in graph.adjacency.items()}
    degrees = []
    record = []
    worst = 0
    for idx, step in enumerate(schedule):
        bound = _rule_bound(adj, step, idx)
        if step.claimed_degree is not None and bound > step.claimed_degree:
            raise ScheduleError(
                f"step {idx} ({step.rule} {step.label}): realized degree {bound} "
                f"exceeds claimed {step.claimed_degree}")
        degrees.append(bound)
        for v in _order(step):
            nbrs = _eliminate_vertex(adj, v)
            if len(nbrs) > bound:
                # cannot happen if the lemmas hold; guards against bugs here
                raise ScheduleError(f"step {idx}: vertex {v} has degree {len(nbrs)} > bound {bound}")
            worst = max(worst, len(nbrs))
            record.append((v, frozenset(nbrs)))
    edges = frozenset((u, w) for u, ns in adj.items() for w in ns if u < w)
    rem = UGraph(graph.num_vertices, edges, vertex_set=frozenset(adj))
    return ScheduleRun(degrees, worst, rem, record)


def check_schedule_degrees(graph: UGraph, schedule: Iterable[EliminationStep]) -> list[int]:
    """Per-step lemma bounds; raises ScheduleError on overflow or a broken side condition."""
    return simulate_schedule(graph, schedule).degrees


def empty_tail() -> TreeDecomposition:
    return TreeDecomposition((DecompNode(frozenset()),), 0, is_path=True)


def td_from_schedule(graph: UGraph, schedule: Iterable[EliminationStep],
                     tail_td: TreeDecomposition | None = None) -> TreeDecomposition:
    td, _ = certify(graph, schedule, tail_td)
    return td


def certify(graph: UGraph, schedule: Iterable[EliminationStep],
            tail_td: TreeDecomposition | None = None) -> tuple[TreeDecomposition, ScheduleRun]:
    """Run the schedule and glue one bag N[v] per eliminated vertex onto the tail."""
    tail_td = tail_td or empty_tail()
    run = simulate_schedule(graph, schedule)
    report = validate_decomposition(run.remainder, tail_td)
    if not report.ok:
        raise ScheduleError(f"tail decomposition does not fit the remaining graph: {report}")
    nodes = [DecompNode(n.bag, Kind.PLAIN, None, n.children) for n in tail_td.nodes]
    children: list[list[int]] = [list(n.children) for n in nodes]
    holders: dict[int, set[int]] = {}
    for i, n in enumerate(tail_td.nodes):
        for v in n.bag:
            holders.setdefault(v, set()).add(i)
    pos = {v: t for t, (v, _) in enumerate(run.neighbourhoods)}
    node_of: dict[int, int] = {}
    # later eliminations first, so every parent exists when its child is attached
    for v, nbrs in reversed(run.neighbourhoods):
        later = [u for u in nbrs if u in pos]
        if later:
            parent = node_of[min(later, key=pos.__getitem__)]
        elif nbrs:
            cands = None
            for u in nbrs:
                cands = set(holders.get(u, ())) if cands is None else cands & holders.get(u, set())
            if not cands:
                raise ScheduleError(f"no tail bag contains the neighbourhood of {v}")
            parent = min(cands)
        else:
            parent = tail_td.root
        idx = len(nodes)
        nodes.append(DecompNode(frozenset(nbrs | {v})))
        children.append([])
        children[parent].append(idx)
        node_of[v] = idx
    final = tuple(DecompNode(n.bag, Kind.PLAIN, None, tuple(ch)) for n, ch in zip(nodes, children))
    is_path = all(len(ch) <= 1 for ch in children)
    return TreeDecomposition(final, tail_td.root, is_path=is_path), run


# -- path decompositions from layouts --------------------------------------

def path_from_layout(graph: UGraph, order: Sequence[int]) -> TreeDecomposition:
    """Vertex-separation sweep.

    Bag t holds order[t] plus every earlier vertex that still has a
    neighbour at position >= t.  Bags contained in a neighbouring bag are
    dropped, which keeps the result a valid path decomposition.
    """
    pos = {v: t for t, v in enumerate(order)}
    if len(pos) != len(order) or set(pos) != set(graph.vertices):
        raise InstanceError("layout must list every vertex exactly once")
    last = {v: max([pos[v]] + [pos[u] for u in graph.neighbors(v)]) for v in order}
    expire: dict[int, list[int]] = {}
    for v, t in last.items():
        expire.setdefault(t, []).append(v)
    bags = []
    live: set[int] = set()
    for t, v in enumerate(order):
        live.add(v)
        bags.append(frozenset(live))
        for u in expire.get(t, ()):
            live.discard(u)
    kept: list[frozenset[int]] = []
    for b in bags:
        while kept and kept[-1] <= b:
            kept.pop()
        if kept and b <= kept[-1]:
            continue
        kept.append(b)
    if not kept:
        kept = [frozenset()]
    nodes = [DecompNode(b, Kind.PLAIN, None, (i + 1,) if i + 1 < len(kept) else ())
             for i, b in enumerate(kept)]
    return TreeDecomposition(tuple(nodes), 0, is_path=True)


def layout_width(graph: UGraph, order: Sequence[int]) -> int:
    return decomposition_width(path_from_layout(graph, order))


# -- nice normalisation -----------------------------------------------------

class _Builder:
    def __init__(self):
        self.bags: list[frozenset[int]] = []
        self.kinds: list[tuple[Kind, int | None]] = []
        self.children: list[tuple[int, ...]] = []

    def add(self, bag, kind, item=None, children=()):
        self.bags.append(frozenset(bag))
        self.kinds.append((kind, item))
        self.children.append(tuple(children))
        return len(self.bags) - 1

    def move(self, top: int, target: frozenset[int]) -> int:
        """Forget, then introduce, until the bag at ``top`` equals target."""
        bag = self.bags[top]
        for v in sorted(bag - target):
            bag = bag - {v}
            top = self.add(bag, Kind.FORGET, v, (top,))
        for v in sorted(target - bag):
            bag = bag | {v}
            top = self.add(bag, Kind.INTRO, v, (top,))
        return top


def assign_clauses(scopes: Sequence[frozenset[int]], td: TreeDecomposition) -> dict[int, list[int]]:
    """Node -> clause indices, first bag in DFS preorder that covers the scope."""
    out: dict[int, list[int]] = {}
    order = td.preorder()
    pending = {}
    for c, scope in enumerate(scopes):
        pending.setdefault(scope, []).append(c)
    for n in order:
        bag = td.nodes[n].bag
        done = [s for s in pending if s <= bag]
        for s in done:
            out.setdefault(n, []).extend(pending.pop(s))
    if pending:
        c = min(c for cs in pending.values() for c in cs)
        raise InstanceError(f"clause {c} is covered by no bag")
    for cs in out.values():
        cs.sort()
    return out


def normalize_nice(instance: CnfInstance | UGraph, td: TreeDecomposition,
                   shape: str | None = None) -> TreeDecomposition:
    """Nice decomposition of the same width.

    Node count is at most sum over arcs of (|X_c| + |X_p|) plus #clauses plus
    one Leaf and one Join per original node, i.e. within
    3 * (#bags * (maxbag + 1) + #clauses).
    """
    graph = as_graph(instance)
    report = validate_decomposition(graph, td)
    if not report.ok:
        raise InstanceError(f"decomposition is not valid for the instance: {report}")
    if shape == "path" and not all(len(n.children) <= 1 for n in td.nodes):
        raise InstanceError("a path shape was requested but the input branches")
    scopes = instance.scopes()
    placed = assign_clauses(scopes, td)
    b = _Builder()
    top: dict[int, int] = {}
    for n in td.postorder():
        node = td.nodes[n]
        bag = node.bag
        if not node.children:
            t = b.move(b.add(frozenset(), Kind.LEAF), bag)
        else:
            tops = [b.move(top.pop(c), bag) for c in node.children]
            t = tops[0]
            for other in tops[1:]:
                t = b.add(bag, Kind.JOIN, None, (t, other))
        for c in placed.get(n, ()):
            t = b.add(bag, Kind.INTRO_CLAUSE, c, (t,))
        top[n] = t
    root = b.move(top[td.root], frozenset())
    return _renumber(b, root)


def _renumber(b: _Builder, root: int) -> TreeDecomposition:
    order = []
    stack = [root]
    while stack:
        n = stack.pop()
        order.append(n)
        stack.extend(reversed(b.children[n]))
    new = {old: i for i, old in enumerate(order)}
    nodes = []
    for old in order:
        kind, item = b.kinds[old]
        nodes.append(DecompNode(b.bags[old], kind, item, tuple(new[c] for c in b.children[old])))
    is_path = all(len(n.children) <= 1 for n in nodes)
    return TreeDecomposition(tuple(nodes), 0, is_path=is_path, is_nice=True)
