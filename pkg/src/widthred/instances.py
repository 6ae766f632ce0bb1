"""Formulas, graphs and (nice) tree decompositions.

Variables and vertices are dense 0-based integers.  Inside a clause a
literal is stored DIMACS-style as a signed integer ``±(var + 1)``; the
:class:`Literal` view is there for code that prefers named fields.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from itertools import combinations
from typing import Iterable, NamedTuple, Sequence


class InstanceError(ValueError):
    """Structurally invalid formula, graph or decomposition."""


class Literal(NamedTuple):
    var: int
    negated: bool = False

    def to_int(self) -> int:
        return -(self.var + 1) if self.negated else self.var + 1

    @classmethod
    def from_int(cls, lit: int) -> "Literal":
        return cls(abs(lit) - 1, lit < 0)


def pos(v: int) -> int:
    return v + 1


def neg(v: int) -> int:
    return -(v + 1)


def lit_var(lit: int) -> int:
    return abs(lit) - 1


class Clause(NamedTuple):
    lits: tuple[int, ...]
    mult: int = 1

    def variables(self) -> frozenset[int]:
        return frozenset(abs(l) - 1 for l in self.lits)

    def literals(self) -> tuple[Literal, ...]:
        return tuple(Literal.from_int(l) for l in self.lits)

    def satisfied_by(self, assignment: Sequence[bool]) -> bool:
        return any(assignment[abs(l) - 1] == (l > 0) for l in self.lits)


@dataclass(frozen=True)
class CnfInstance:
    num_vars: int
    clauses: tuple[Clause, ...] = ()
    target: int | None = None
    max_clause_len: int | None = None
    names: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        clauses = tuple(c if isinstance(c, Clause) else Clause(tuple(c)) for c in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        if self.num_vars < 0:
            raise InstanceError("negative variable count")
        for idx, c in enumerate(clauses):
            if not c.lits:
                raise InstanceError(f"clause {idx} is empty")
            if c.mult < 1:
                raise InstanceError(f"clause {idx} has multiplicity {c.mult}")
            if len(set(c.lits)) != len(c.lits):
                raise InstanceError(f"clause {idx} repeats a literal")
            if 0 in c.lits or max(map(abs, c.lits)) > self.num_vars:
                bad = next(l for l in c.lits if l == 0 or abs(l) > self.num_vars)
                raise InstanceError(f"clause {idx}: literal {bad} out of range")
            if self.max_clause_len is not None and len(c.lits) > self.max_clause_len:
                raise InstanceError(f"clause {idx} longer than {self.max_clause_len}")
        if self.target is not None:
            if self.target < 0:
                raise InstanceError("negative target")
            if self.target > self.total_weight:
                raise InstanceError(
                    f"target {self.target} exceeds total multiplicity {self.total_weight}")
        if self.names is not None and len(self.names) != self.num_vars:
            raise InstanceError("name table size differs from variable count")

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @cached_property
    def total_weight(self) -> int:
        return sum(c.mult for c in self.clauses)

    def scopes(self) -> list[frozenset[int]]:
        return [c.variables() for c in self.clauses]

    def name(self, v: int) -> str:
        return self.names[v] if self.names else f"x{v + 1}"

    def count_satisfied(self, assignment: Sequence[bool]) -> int:
        return sum(c.mult for c in self.clauses if c.satisfied_by(assignment))

    def is_satisfied_by(self, assignment: Sequence[bool]) -> bool:
        return all(c.satisfied_by(assignment) for c in self.clauses)

    @cached_property
    def primal(self) -> "UGraph":
        return _primal(self)

    def with_target(self, target: int | None) -> "CnfInstance":
        return CnfInstance(self.num_vars, self.clauses, target, self.max_clause_len, self.names)


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class UGraph:
    """Undirected simple graph.

    ``vertex_set`` restricts the live vertices (used by elimination, which
    keeps survivor identifiers unchanged); ``None`` means ``range(num_vertices)``.
    """

    num_vertices: int
    edges: frozenset[tuple[int, int]] = frozenset()
    is_target: int | None = None
    names: tuple[str, ...] | None = field(default=None, compare=False)
    vertex_set: frozenset[int] | None = None

    def __post_init__(self):
        edges = frozenset(_norm_edge(u, v) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        live = self.vertices
        for u, v in edges:
            if u == v:
                raise InstanceError(f"self-loop at {u}")
            if u < 0 or v >= self.num_vertices:
                raise InstanceError(f"edge {(u, v)} out of range")
            if self.vertex_set is not None and (u not in live or v not in live):
                raise InstanceError(f"edge {(u, v)} touches a removed vertex")
        if self.is_target is not None and self.is_target < 0:
            raise InstanceError("negative independent-set target")
        if self.names is not None and len(self.names) != self.num_vertices:
            raise InstanceError("name table size differs from vertex count")

    @cached_property
    def vertices(self) -> frozenset[int] | range:
        if self.vertex_set is None:
            return range(self.num_vertices)
        return self.vertex_set

    @cached_property
    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {v: set() for v in self.vertices}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def neighbors(self, v: int) -> set[int]:
        return self.adjacency[v]

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def scopes(self) -> list[frozenset[int]]:
        """Pseudo-clauses: one 2-element scope per edge, in sorted edge order."""
        return [frozenset(e) for e in self.sorted_edges()]

    def name(self, v: int) -> str:
        return self.names[v] if self.names else str(v + 1)

    def is_independent(self, vertices: Iterable[int]) -> bool:
        chosen = set(vertices)
        return not any(u in chosen and v in chosen for u, v in self.edges)


def primal_graph(cnf: CnfInstance) -> UGraph:
    """One vertex per variable, an edge between variables sharing a clause."""
    return cnf.primal


def _primal(cnf: CnfInstance) -> UGraph:
    edges: set[tuple[int, int]] = set()
    for scope in {frozenset(abs(l) - 1 for l in c.lits) for c in cnf.clauses if len(c.lits) > 1}:
        edges.update(combinations(sorted(scope), 2))
    return UGraph(cnf.num_vars, frozenset(edges), names=cnf.names)


def as_graph(instance: CnfInstance | UGraph) -> UGraph:
    return instance if isinstance(instance, UGraph) else primal_graph(instance)


# -- decompositions ---------------------------------------------------------

class Kind(str, Enum):
    LEAF = "Leaf"
    INTRO = "IntroV"
    INTRO_CLAUSE = "IntroC"
    FORGET = "Forget"
    JOIN = "Join"
    PLAIN = "Plain"


@dataclass(frozen=True)
class DecompNode:
    bag: frozenset[int]
    kind: Kind = Kind.PLAIN
    item: int | None = None  # vertex for IntroV/Forget, clause index for IntroC
    children: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class TreeDecomposition:
    nodes: tuple[DecompNode, ...]
    root: int = 0
    is_path: bool = False
    is_nice: bool = False

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))

    def __len__(self) -> int:
        return len(self.nodes)

    @cached_property
    def parent(self) -> list[int | None]:
        par: list[int | None] = [None] * len(self.nodes)
        for i, node in enumerate(self.nodes):
            for c in node.children:
                par[c] = i
        return par

    def postorder(self) -> list[int]:
        """Children before parents, children visited in stored order."""
        out: list[int] = []
        stack = [(self.root, False)]
        while stack:
            n, done = stack.pop()
            if done:
                out.append(n)
                continue
            stack.append((n, True))
            for c in reversed(self.nodes[n].children):
                stack.append((c, False))
        return out

    def preorder(self) -> list[int]:
        out: list[int] = []
        stack = [self.root]
        while stack:
            n = stack.pop()
            out.append(n)
            stack.extend(reversed(self.nodes[n].children))
        return out

    def bags(self) -> list[frozenset[int]]:
        return [n.bag for n in self.nodes]


def decomposition_width(td: TreeDecomposition) -> int:
    """Largest bag size minus one; an all-empty decomposition has width 0."""
    if not td.nodes:
        raise InstanceError("empty decomposition has no width")
    return max(0, max(len(n.bag) for n in td.nodes) - 1)


def single_bag(instance: CnfInstance | UGraph) -> TreeDecomposition:
    """The trivial decomposition: every vertex in one bag."""
    g = as_graph(instance)
    return TreeDecomposition((DecompNode(frozenset(g.vertices)),), 0, is_path=True)


# -- validation -------------------------------------------------------------

NOT_A_TREE = "not-a-tree"
NOT_A_PATH = "not-a-path"
UNKNOWN_ELEMENT = "unknown-element"
VERTEX_UNCOVERED = "vertex-uncovered"
EDGE_UNCOVERED = "edge-uncovered"
NOT_CONNECTED = "subtree-disconnected"
ROOT_NOT_EMPTY = "root-not-empty"
BAD_NODE = "bad-node-kind"
FORGET_COUNT = "forget-count"
CLAUSE_COUNT = "introduce-clause-count"


@dataclass(frozen=True)
class Violation:
    code: str
    node: int | None = None
    element: object = None
    detail: str = ""

    def __str__(self):
        where = f" node {self.node}" if self.node is not None else ""
        what = f" element {self.element}" if self.element is not None else ""
        return f"{self.code}{where}{what}: {self.detail}".rstrip(": ")


@dataclass
class ValidationReport:
    width: int | None
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def __str__(self):
        if self.ok:
            return f"valid, width {self.width}"
        return "invalid:\n" + "\n".join(f"  {v}" for v in self.violations)


def _tree_violations(td: TreeDecomposition) -> list[Violation]:
    out = []
    n = len(td.nodes)
    if not 0 <= td.root < n:
        return [Violation(NOT_A_TREE, detail=f"root {td.root} out of range")]
    parents = [0] * n
    for i, node in enumerate(td.nodes):
        for c in node.children:
            if not 0 <= c < n or c == i:
                out.append(Violation(NOT_A_TREE, i, detail=f"bad child {c}"))
                continue
            parents[c] += 1
        if td.is_path and len(node.children) > 1:
            out.append(Violation(NOT_A_PATH, i, detail=f"{len(node.children)} children"))
    if out:
        return out
    for i in range(n):
        expected = 0 if i == td.root else 1
        if parents[i] != expected:
            out.append(Violation(NOT_A_TREE, i, detail=f"{parents[i]} parents"))
    if not out:
        seen = set(td.preorder())
        if len(seen) != n:
            out.append(Violation(NOT_A_TREE, detail="nodes unreachable from root"))
    return out


def validate_decomposition(graph: UGraph, td: TreeDecomposition) -> ValidationReport:
    """Check the three tree-decomposition properties, collecting every violation."""
    if not td.nodes:
        return ValidationReport(None, [Violation(NOT_A_TREE, detail="no nodes")])
    violations = _tree_violations(td)
    if violations:
        return ValidationReport(None, violations)
    live = set(graph.vertices)
    holders: dict[int, list[int]] = {}
    for i, node in enumerate(td.nodes):
        for v in node.bag:
            if v not in live:
                violations.append(Violation(UNKNOWN_ELEMENT, i, v, "not a graph vertex"))
            holders.setdefault(v, []).append(i)
    for v in sorted(live - holders.keys()):
        violations.append(Violation(VERTEX_UNCOVERED, None, v, "in no bag"))
    holder_sets = {v: set(ns) for v, ns in holders.items()}
    nowhere: set[int] = set()
    for u, v in graph.sorted_edges():
        if holder_sets.get(u, nowhere).isdisjoint(holder_sets.get(v, nowhere)):
            violations.append(Violation(EDGE_UNCOVERED, None, (u, v), "no bag holds both ends"))
    parent = td.parent
    for v, ns in holders.items():
        inside = holder_sets[v]
        tops = [i for i in ns if parent[i] is None or parent[i] not in inside]
        if len(tops) > 1:
            violations.append(Violation(NOT_CONNECTED, tops[1], v,
                                        f"bags holding it form {len(tops)} components"))
    width = decomposition_width(td) if not violations else None
    return ValidationReport(width, violations)


def validate_nice(instance: CnfInstance | UGraph, td: TreeDecomposition) -> ValidationReport:
    """Three-property check plus the nice node grammar.

    For a graph the IntroduceClause nodes refer to edges in sorted order.
    """
    graph = as_graph(instance)
    report = validate_decomposition(graph, td)
    if any(v.code in (NOT_A_TREE, NOT_A_PATH) for v in report.violations):
        return report
    scopes = instance.scopes()
    bad = report.violations
    if td.nodes[td.root].bag:
        bad.append(Violation(ROOT_NOT_EMPTY, td.root, detail="root bag must be empty"))
    forgets: dict[int, int] = {}
    intro_clause: dict[int, int] = {}
    for i, node in enumerate(td.nodes):
        ch = [td.nodes[c].bag for c in node.children]
        bag = node.bag
        kind = node.kind
        err = None
        if kind == Kind.LEAF:
            if ch or bag:
                err = "leaf must be childless with an empty bag"
        elif kind == Kind.INTRO:
            if len(ch) != 1 or node.item in ch[0] or bag != ch[0] | {node.item}:
                err = f"IntroV({node.item}) must add exactly that element to its child"
        elif kind == Kind.INTRO_CLAUSE:
            if len(ch) != 1 or bag != ch[0]:
                err = "IntroC must have one child with an identical bag"
            elif node.item is None or not 0 <= node.item < len(scopes):
                err = f"IntroC refers to unknown clause {node.item}"
            elif not scopes[node.item] <= bag:
                err = f"bag misses variables of clause {node.item}"
            else:
                intro_clause[node.item] = intro_clause.get(node.item, 0) + 1
        elif kind == Kind.FORGET:
            if len(ch) != 1 or node.item not in ch[0] or bag != ch[0] - {node.item}:
                err = f"Forget({node.item}) must drop exactly that element from its child"
            else:
                forgets[node.item] = forgets.get(node.item, 0) + 1
        elif kind == Kind.JOIN:
            if len(ch) != 2 or ch[0] != bag or ch[1] != bag:
                err = "Join needs two children with identical bags"
        else:
            err = "Plain node in a nice decomposition"
        if err:
            bad.append(Violation(BAD_NODE, i, node.item, err))
    elements = set().union(*(n.bag for n in td.nodes))
    for v in sorted(elements | forgets.keys()):
        if forgets.get(v, 0) != 1:
            bad.append(Violation(FORGET_COUNT, None, v, f"forgotten {forgets.get(v, 0)} times"))
    for c in range(len(scopes)):
        if intro_clause.get(c, 0) != 1:
            bad.append(Violation(CLAUSE_COUNT, None, c,
                                 f"introduced {intro_clause.get(c, 0)} times"))
    if bad:
        report.width = None
    return report
