"""k-expressions: syntax, evaluation, and the two clique-width reductions.

Text syntax (whitespace-insensitive):

    v(i,name)        create vertex `name` with label i
    union(E,F)       disjoint union
    eta(i,j,E)       join every i-labelled vertex to every j-labelled one
    rho(i,j,E)       rename label i to j

Labels are positive integers or the sink `#`.  Lines starting with `c` are
comments and an optional `p cwe <k>` line declares the label budget.
Expressions can be thousands of levels deep, so parsing, printing and
evaluation are all iterative.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Union as TUnion

from .decomp import EliminationSchedule, EliminationStep, SUBSET, certify
from .gadgets import CnfBuilder, adder, bits_needed, eq, geq_const
from .instances import (
    CnfInstance, TreeDecomposition, UGraph, decomposition_width,
    primal_graph, validate_decomposition,
)
from .result import IS, SAT, BoundRecord, ReductionOutput

SINK = "#"
Label = TUnion[int, str]

C_CW_SAT = 3
C_LABELS = 14
C_LABELS_PATH = 13


class ExpressionError(ValueError):
    pass


@dataclass(eq=False)
class Create:
    label: Label
    name: str

    def __repr__(self):
        return f"Create({self.label!r}, {self.name!r})"


@dataclass(eq=False)
class Union:
    left: "Expr"
    right: "Expr"

    def __repr__(self):
        return "Union(...)"


@dataclass(eq=False)
class Join:
    i: Label
    j: Label
    child: "Expr"

    def __repr__(self):
        return f"Join({self.i!r}, {self.j!r}, ...)"


@dataclass(eq=False)
class Rename:
    i: Label
    j: Label
    child: "Expr"

    def __repr__(self):
        return f"Rename({self.i!r}, {self.j!r}, ...)"


Expr = TUnion[Create, Union, Join, Rename]


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Create):
        return ()
    if isinstance(e, Union):
        return (e.left, e.right)
    return (e.child,)


def postorder(root: Expr) -> list[Expr]:
    # a node, right, left preorder read backwards is a postorder
    out: list[Expr] = []
    stack: list[Expr] = [root]
    while stack:
        e = stack.pop()
        out.append(e)
        t = type(e)
        if t is Union:
            stack.append(e.left)
            stack.append(e.right)
        elif t is not Create:
            stack.append(e.child)
    out.reverse()
    return out


def labels_of(root: Expr) -> set[Label]:
    out: set[Label] = set()
    for e in postorder(root):
        if isinstance(e, Create):
            out.add(e.label)
        elif not isinstance(e, Union):
            out.update((e.i, e.j))
    return out


@dataclass
class CliqueExpression:
    root: Expr
    budget: int | None = None

    def labels(self) -> set[Label]:
        return labels_of(self.root)

    def num_labels(self) -> int:
        return len(self.labels())

    def num_vertices(self) -> int:
        return sum(1 for e in postorder(self.root) if isinstance(e, Create))


# -- text format ------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(union|eta|rho|v)\s*\(|([(),])|(#|[^\s(),]+))")


def _label(tok: str) -> Label:
    if tok == SINK:
        return SINK
    try:
        val = int(tok)
    except ValueError:
        raise ExpressionError(f"bad label {tok!r}") from None
    if val < 1:
        raise ExpressionError(f"labels are positive, got {val}")
    return val


def _tokens(text: str) -> Iterator[tuple[str, str]]:
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionError(f"unexpected input at offset {pos}: {text[pos:pos + 20]!r}")
        pos = m.end()
        if m.group(1):
            yield "op", m.group(1)
        elif m.group(2):
            yield "punct", m.group(2)
        else:
            yield "atom", m.group(3)


def parse_cwe(text: str) -> CliqueExpression:
    budget = None
    body = []
    for line in text.splitlines():
        s = line.strip()
        if not s:
            continue
        if s.startswith("p "):
            parts = s.split()
            if len(parts) != 3 or parts[1] != "cwe":
                raise ExpressionError(f"bad header {s!r}")
            budget = int(parts[2])
        elif s == "c" or s.startswith("c "):
            continue
        else:
            body.append(s)
    toks = list(_tokens(" ".join(body)))
    # frames: [op, args collected]; args are atoms or finished expressions
    stack: list[list] = []
    result = None
    for kind, tok in toks:
        if result is not None:
            raise ExpressionError("trailing input after the expression")
        if kind == "op":
            stack.append([tok, []])
            continue
        if not stack:
            raise ExpressionError(f"unexpected {tok!r} outside an expression")
        frame = stack[-1]
        if kind == "atom":
            frame[1].append(tok)
        elif tok == ",":
            continue
        elif tok == ")":
            op, args = stack.pop()
            node = _make(op, args)
            if stack:
                stack[-1][1].append(node)
            else:
                result = node
        else:
            raise ExpressionError("stray '('")
    if stack or result is None:
        raise ExpressionError("unbalanced parentheses or empty expression")
    expr = CliqueExpression(result, budget)
    if budget is not None and expr.num_labels() > budget:
        raise ExpressionError(f"expression uses {expr.num_labels()} labels, budget is {budget}")
    return expr


def _make(op: str, args: list) -> Expr:
    def atoms(n):
        if len(args) < n or not all(isinstance(a, str) for a in args[:n]):
            raise ExpressionError(f"{op} expects {n} leading atoms")
        return args[:n]

    if op == "v":
        if len(args) != 2:
            raise ExpressionError("v(i,name) takes two arguments")
        lab, name = atoms(2)
        return Create(_label(lab), name)
    if op == "union":
        if len(args) != 2 or any(isinstance(a, str) for a in args):
            raise ExpressionError("union takes two expressions")
        return Union(args[0], args[1])
    if len(args) != 3 or isinstance(args[2], str):
        raise ExpressionError(f"{op}(i,j,E) takes two labels and an expression")
    i, j = (_label(a) for a in atoms(2))
    if op == "eta":
        if i == j:
            raise ExpressionError("eta needs two different labels")
        if SINK in (i, j):
            raise ExpressionError("the sink label never takes new edges")
        return Join(i, j, args[2])
    if i == SINK:
        raise ExpressionError("the sink label is never renamed")
    return Rename(i, j, args[2])


def format_cwe(expr: CliqueExpression, comments=()) -> str:
    out: list[str] = []
    stack: list[object] = [expr.root]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        e = item
        if isinstance(e, Create):
            out.append(f"v({e.label},{e.name})")
        elif isinstance(e, Union):
            stack.extend([")", e.right, ",", e.left])
            out.append("union(")
        else:
            op = "eta" if isinstance(e, Join) else "rho"
            stack.extend([")", e.child])
            out.append(f"{op}({e.i},{e.j},")
    head = [f"c {c}" for c in comments]
    if expr.budget is not None:
        head.append(f"p cwe {expr.budget}")
    return "\n".join(head + ["".join(out)]) + "\n"


# -- evaluation -------------------------------------------------------------

@dataclass
class LabeledGraph:
    graph: UGraph
    labels: dict[int, Label]
    max_live_labels: int = 0

    @property
    def names(self) -> tuple[str, ...]:
        return self.graph.names


def evaluate_kexpression(expr: CliqueExpression) -> LabeledGraph:
    used = expr.labels()
    if expr.budget is not None and len(used) > expr.budget:
        raise ExpressionError(f"{len(used)} labels used, budget {expr.budget}")
    names: list[str] = []
    edges: set[tuple[int, int]] = set()
    results: list[dict[Label, set[int]]] = []   # stack of label -> vertices
    peak = 0
    for e in postorder(expr.root):
        if isinstance(e, Create):
            names.append(e.name)
            results.append({e.label: {len(names) - 1}})
        elif isinstance(e, Union):
            right = results.pop()
            left = results.pop()
            if sum(map(len, left.values())) < sum(map(len, right.values())):
                left, right = right, left
            for lab, vs in right.items():
                left.setdefault(lab, set()).update(vs)
            results.append(left)
        elif isinstance(e, Join):
            cls = results[-1]
            for u in cls.get(e.i, ()):
                for v in cls.get(e.j, ()):
                    edges.add((u, v) if u < v else (v, u))
        else:
            cls = results[-1]
            vs = cls.pop(e.i, None)
            if vs:
                cls.setdefault(e.j, set()).update(vs)
        peak = max(peak, len(results[-1]))
    (final,) = results
    labels = {v: lab for lab, vs in final.items() for v in vs}
    g = UGraph(len(names), frozenset(edges), names=tuple(names))
    return LabeledGraph(g, labels, peak)


def complete_graph_expression(n: int) -> CliqueExpression:
    """Two labels: add each new vertex with label 2, join to 1, rename 2 to 1."""
    if n < 1:
        raise ExpressionError("K_n needs n >= 1")
    e: Expr = Create(1, "v1")
    for i in range(2, n + 1):
        e = Rename(2, 1, Join(1, 2, Union(e, Create(2, f"v{i}"))))
    return CliqueExpression(e, 2 if n > 1 else 1)


def p4_expression() -> CliqueExpression:
    inner = Join(3, 2, Union(Create(3, "c"), Join(2, 1, Union(Create(2, "b"), Create(1, "a")))))
    return CliqueExpression(Join(3, 2, Union(Create(3, "d"), Rename(3, 2, Rename(2, 1, inner)))), 3)


# -- IS parameterised by clique-width -> SAT by tree-width --------------------

def is_cw_to_sat_tw(expr: CliqueExpression, k: int) -> ReductionOutput:
    """Satisfiable iff the expressed graph has an independent set of size >= k."""
    ops = postorder(expr.root)
    labels = sorted(expr.labels(), key=lambda l: (isinstance(l, str), l if isinstance(l, int) else 0))
    cw = len(labels)
    n = sum(1 for e in ops if isinstance(e, Create))
    M = bits_needed(n)
    b = CnfBuilder()
    Y: dict[int, dict[Label, int]] = {}
    S: dict[int, tuple[int, ...]] = {}
    index = {id(e): t for t, e in enumerate(ops)}
    for t, e in enumerate(ops):
        Y[t] = {lab: b.var(f"o{t + 1}:l:{lab}") for lab in labels}
        S[t] = b.group(f"o{t + 1}:s", M)
    parent: dict[int, int] = {}
    for t, e in enumerate(ops):
        for c in children(e):
            parent[index[id(c)]] = t
        if isinstance(e, Create):
            b.constrain(eq(S[t], (Y[t][e.label],)))
        elif isinstance(e, Union):
            l, r = index[id(e.left)], index[id(e.right)]
            for lab in labels:
                b.add((-(Y[l][lab] + 1), Y[t][lab] + 1))
                b.add((-(Y[r][lab] + 1), Y[t][lab] + 1))
            b.constrain(adder(S[t], S[l], S[r]))
        elif isinstance(e, Join):
            c = index[id(e.child)]
            for lab in labels:
                b.equal(Y[t][lab], Y[c][lab])
            b.add((-(Y[t][e.i] + 1), -(Y[t][e.j] + 1)))
            for s, q in zip(S[t], S[c]):
                b.equal(s, q)
        else:
            c = index[id(e.child)]
            for s, q in zip(S[t], S[c]):
                b.equal(s, q)
            if e.i == e.j:
                for lab in labels:
                    b.equal(Y[t][lab], Y[c][lab])
                continue
            for lab in labels:
                if lab not in (e.i, e.j):
                    b.equal(Y[t][lab], Y[c][lab])
            oj, ci, cj = Y[t][e.j] + 1, Y[c][e.i] + 1, Y[c][e.j] + 1
            b.add((-oj, ci, cj))
            b.add((-ci, oj))
            b.add((-cj, oj))
            b.add((-(Y[t][e.i] + 1),))
    root = len(ops) - 1
    b.constrain(geq_const(S[root], k))
    out = b.build()

    claimed = cw + C_CW_SAT * M
    sched = EliminationSchedule()
    for t in range(len(ops)):
        ys = list(Y[t].values())
        if t == root:
            sched.add(EliminationStep(tuple(ys) + S[t], SUBSET, claimed, label="root"))
            continue
        sched.add(EliminationStep.matching(ys, Y[parent[t]].values(), claimed, label=f"Y {t}"))
        sched.add(EliminationStep(S[t], SUBSET, claimed, label=f"S {t}"))
    graph = primal_graph(out)
    cert, run = certify(graph, sched)
    rep = validate_decomposition(graph, cert)
    if not rep.ok:
        raise AssertionError(f"is_cw_to_sat_tw certificate invalid: {rep}")
    source = evaluate_kexpression(expr).graph
    source = UGraph(source.num_vertices, source.edges, k, source.names)
    bound = BoundRecord(cw, "cw + c*ceil(log2(n+1))", C_CW_SAT, M, decomposition_width(cert))
    extras = {"M": M, "n": n, "source_graph": source, "step_degrees": run.degrees}
    return ReductionOutput("is_cw_to_sat_tw", out, cert, bound,
                           "satisfiable <=> independent set of size >= k", IS, SAT, extras)


# -- 3-SAT by tree-width -> IS by clique-width -------------------------------

@dataclass
class _Partial:
    """A k-expression under construction plus its live label classes."""

    ast: Expr | None = None
    created: set[int] = field(default_factory=set)
    future: dict[Label, frozenset[int]] = field(default_factory=dict)   # live label -> future nbrs
    by_future: dict[frozenset[int], Label] = field(default_factory=dict)
    used: set[Label] = field(default_factory=set)
    peak: int = 0

    def free_label(self) -> int:
        lab = 1
        while lab in self.future:
            lab += 1
        return lab

    def wrap(self, node: Expr) -> None:
        self.ast = node


class FrontierBuilder:
    """Emit a k-expression for a graph whose vertices arrive along a tree.

    Live vertices with the same set of not-yet-created neighbours share a
    label; a vertex with no such neighbour moves to the sink `#` and is never
    touched again.  Two subtrees are merged by renaming the right one so
    that equal classes meet on one label, then a single union.
    """

    def __init__(self, graph: UGraph):
        self.adj = graph.adjacency
        self.names = graph.names

    def add(self, part: _Partial, u: int) -> None:
        adj = self.adj
        hits = [lab for lab, fut in part.future.items() if u in fut]
        fut_u = frozenset(w for w in adj[u] if w not in part.created and w != u)
        part.created.add(u)
        name = self.names[u] if self.names else str(u + 1)
        if not hits:
            if not fut_u:
                lab = SINK
            else:
                lab = part.by_future.get(fut_u) or part.free_label()
            node = Create(lab, name)
            part.used.add(lab)
            part.ast = node if part.ast is None else Union(part.ast, node)
            if lab != SINK and lab not in part.future:
                part.future[lab] = fut_u
                part.by_future[fut_u] = lab
            part.peak = max(part.peak, len(part.future) + 1)
            return
        t = part.free_label()
        part.used.add(t)
        node: Expr = Union(part.ast, Create(t, name))
        for lab in hits:
            node = Join(t, lab, node)
        part.future[t] = fut_u
        part.peak = max(part.peak, len(part.future) + 1)
        changed = [t]
        for lab in hits:
            old = part.future[lab]
            del part.by_future[old]
            part.future[lab] = old - {u}
            changed.append(lab)
        for lab in changed:
            fut = part.future[lab]
            if not fut:
                node = Rename(lab, SINK, node)
                part.used.add(SINK)
                del part.future[lab]
            elif fut in part.by_future and part.by_future[fut] != lab:
                node = Rename(lab, part.by_future[fut], node)
                del part.future[lab]
            else:
                part.by_future[fut] = lab
        part.ast = node

    def merge(self, left: _Partial, right: _Partial) -> _Partial:
        if left.ast is None:
            return right
        if right.ast is None:
            return left
        if left.created & right.created:
            raise AssertionError("subtrees share vertices")
        for v in right.created:
            if self.adj[v] & left.created:
                raise AssertionError("edge between sibling subtrees")
        pi: dict[Label, Label] = {SINK: SINK}
        taken = set(left.future)
        for lab, fut in right.future.items():
            if fut in left.by_future:
                pi[lab] = left.by_future[fut]
            else:
                nxt = 1
                while nxt in taken:
                    nxt += 1
                pi[lab] = nxt
            taken.add(pi[lab])
        images = set(pi.values())
        nxt = 1
        for lab in sorted(l for l in right.used if l not in pi):
            while nxt in images:
                nxt += 1
            pi[lab] = nxt
            images.add(nxt)
        ast = relabel(right.ast, pi)
        out = _Partial(Union(left.ast, ast), left.created | right.created,
                       dict(left.future), dict(left.by_future),
                       left.used | {pi[l] for l in right.used},
                       max(left.peak, right.peak, len(taken) + 1))
        for lab, fut in right.future.items():
            out.future[pi[lab]] = fut
            out.by_future[fut] = pi[lab]
        return out


def relabel(root: Expr, pi: dict[Label, Label]) -> Expr:
    """Copy of the AST with every label mapped through the injective map pi."""
    built: dict[int, Expr] = {}
    for e in postorder(root):
        if isinstance(e, Create):
            new: Expr = Create(pi[e.label], e.name)
        elif isinstance(e, Union):
            new = Union(built.pop(id(e.left)), built.pop(id(e.right)))
        elif isinstance(e, Join):
            new = Join(pi[e.i], pi[e.j], built.pop(id(e.child)))
        else:
            new = Rename(pi[e.i], pi[e.j], built.pop(id(e.child)))
        built[id(e)] = new
    return built[id(root)]


@dataclass
class CwSynthesis:
    expression: CliqueExpression
    k: int
    bound: BoundRecord
    graph: UGraph                 # the 3-SAT -> IS graph the expression must reproduce
    parts: list[list[int]]
    peak_live_labels: int
    reduction: ReductionOutput


def threesat_tw_to_is_cw(src: CnfInstance, ntd: TreeDecomposition | None = None,
                         order: str = "sweep") -> CwSynthesis:
    """k-expression of the 3-SAT -> IS gadget graph, built along the decomposition."""
    from .reduce_tw import threesat_to_is  # local import: reduce_tw is the heavier module

    red = threesat_to_is(src, ntd)
    built = red.extras["builder"]
    graph = red.instance
    tree = built.ntd
    fb = FrontierBuilder(graph)
    partial: dict[int, _Partial] = {}
    for i in tree.postorder():
        kids = tree.nodes[i].children
        cur = _Partial()
        for c in kids:
            cur = fb.merge(cur, partial.pop(c))
        seq = built.owned[i] if order == "creation" else built.node_sequence(i)
        if sorted(seq) != list(built.owned[i]):
            raise AssertionError(f"node {i}: vertex order is not a permutation of its vertices")
        for u in seq:
            fb.add(cur, u)
        partial[i] = cur
    final = partial[tree.root]
    if final.future:
        raise AssertionError("live labels left at the root")
    expr = CliqueExpression(final.ast, None)
    expr.budget = expr.num_labels()
    w = built.w
    L = bits_needed(w + 1)
    c = C_LABELS_PATH if tree.is_path else C_LABELS
    bound = BoundRecord(w, "w + c*ceil(log2(w+2))", c, L, expr.budget)
    return CwSynthesis(expr, graph.is_target, bound, graph, built.b.parts, final.peak, red)


def check_correspondence(syn: CwSynthesis) -> list[str]:
    """Evaluate the expression and compare edge sets through vertex names."""
    lg = evaluate_kexpression(syn.expression)
    problems = []
    index = {nm: v for v, nm in enumerate(syn.graph.names)}
    if len(index) != syn.graph.num_vertices:
        problems.append("target graph has duplicate vertex names")
    if sorted(lg.graph.names) != sorted(syn.graph.names):
        problems.append("vertex sets differ")
        return problems
    mapped = {tuple(sorted((index[lg.graph.names[u]], index[lg.graph.names[v]])))
              for u, v in lg.graph.edges}
    missing = syn.graph.edges - mapped
    extra = mapped - syn.graph.edges
    if missing:
        problems.append(f"{len(missing)} edges missing, e.g. {sorted(missing)[0]}")
    if extra:
        problems.append(f"{len(extra)} extra edges, e.g. {sorted(extra)[0]}")
    return problems


def random_expression(rng, n: int, k: int, join_p: float = 0.5) -> CliqueExpression:
    """Random k-expression on n vertices using labels 1..k."""
    if n < 1 or k < 1:
        raise ExpressionError("need n >= 1 and k >= 1")
    pool: list[Expr] = [Create(rng.randint(1, k), f"v{i + 1}") for i in range(n)]
    while len(pool) > 1:
        a = pool.pop(rng.randrange(len(pool)))
        b = pool.pop(rng.randrange(len(pool)))
        e: Expr = Union(a, b)
        if k > 1:
            while rng.random() < join_p:
                i, j = rng.sample(range(1, k + 1), 2)
                e = Join(i, j, e)
            if rng.random() < 0.3:
                i, j = rng.sample(range(1, k + 1), 2)
                e = Rename(i, j, e)
        pool.append(e)
    return CliqueExpression(pool[0], k)
