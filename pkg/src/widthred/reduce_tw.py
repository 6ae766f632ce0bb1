"""Width-preserving reductions between SAT, 3-SAT, Max 2-SAT and Independent Set.

Each reduction walks a nice decomposition of the source, emits the target
instance, and replays an elimination schedule on the target's (primal)
graph to obtain an explicit width certificate.
"""
from __future__ import annotations

import math

from .decomp import (
    EliminationSchedule, EliminationStep, SUBSET, certify, normalize_nice,
    path_from_layout,
)
from .gadgets import (
    LEQ_SUM_CONST, CnfBuilder, CountingGadget, IsBuilder, VarPort, bits_needed,
    adder, geq_const,
)
from .instances import (
    Clause, CnfInstance, DecompNode, InstanceError, Kind, TreeDecomposition, UGraph,
    decomposition_width, primal_graph, single_bag, validate_decomposition, validate_nice,
)
from .result import IS, MAX2SAT, SAT, BoundRecord, ReductionOutput

# constants of the claimed bounds  w + C * log_term
C_MAX2SAT = 5
C_SAT3 = 2
C_3SAT_IS = 10
C_3SAT_IS_PATH = 13
C_IS_MAX2SAT = 0


def _nice_for(instance, ntd: TreeDecomposition | None) -> TreeDecomposition:
    if ntd is None:
        return normalize_nice(instance, single_bag(instance))
    rep = validate_nice(instance, ntd)
    if not rep.ok:
        raise InstanceError(f"not a nice decomposition of the instance: {rep}")
    return ntd


def _certificate(graph: UGraph, schedule, name: str):
    """Glue the schedule's bags together; consumers validate the result."""
    return certify(graph, schedule)


def log2_ceil(n: int) -> int:
    return math.ceil(math.log2(n)) if n > 1 else 0


# -- Max 2-SAT -> SAT -------------------------------------------------------

def _expand_multiplicities(cnf: CnfInstance, ntd: TreeDecomposition) -> TreeDecomposition:
    """Replace an IntroC node of a clause with multiplicity m by a chain of m copies."""
    nodes = list(ntd.nodes)
    children = [list(n.children) for n in nodes]
    for i, node in enumerate(ntd.nodes):
        if node.kind != Kind.INTRO_CLAUSE:
            continue
        mult = cnf.clauses[node.item].mult
        below = children[i]
        for _ in range(mult - 1):
            nodes.append(DecompNode(node.bag, Kind.INTRO_CLAUSE, node.item, tuple(below)))
            children.append(list(below))
            below = [len(nodes) - 1]
        children[i] = below
    out = [DecompNode(n.bag, n.kind, n.item, tuple(ch)) for n, ch in zip(nodes, children)]
    return TreeDecomposition(tuple(out), ntd.root, ntd.is_path, False)


def _no_clauses(src: CnfInstance, ntd: TreeDecomposition, k: int, w: int) -> ReductionOutput:
    """Without clauses the answer is k <= 0 and no counter is needed."""
    nv = max(src.num_vars, 1)
    out = CnfInstance(nv, () if k <= 0 else ((1,), (-1,)))
    cert = path_from_layout(primal_graph(out), range(nv))
    bound = BoundRecord(w, "w + c*ceil(log2(m+1))", C_MAX2SAT, 0, decomposition_width(cert))
    extras = {"M": 0, "m": 0, "layout": list(range(nv)), "source_path": ntd.is_path, "step_degrees": []}
    return ReductionOutput("max2sat_to_sat", out, cert, bound,
                           "satisfiable <=> at least k clauses satisfiable", MAX2SAT, SAT, extras)


def max2sat_to_sat(src: CnfInstance, ntd: TreeDecomposition | None = None,
                   k: int | None = None) -> ReductionOutput:
    """SAT formula satisfiable iff some assignment satisfies >= k clause copies."""
    for i, c in enumerate(src.clauses):
        if len(c.lits) > 2:
            raise InstanceError(f"clause {i} has {len(c.lits)} literals; Max 2-SAT needs <= 2")
    k = src.target if k is None else k
    if k is None:
        raise InstanceError("Max 2-SAT instance has no target")
    ntd = _nice_for(src, ntd)
    w = decomposition_width(ntd)
    m = src.total_weight
    if m == 0:
        return _no_clauses(src, ntd, k, w)
    M = bits_needed(m)
    tree = _expand_multiplicities(src, ntd)
    parent = tree.parent
    b = CnfBuilder()
    xs: dict[int, dict[int, int]] = {}
    ss: dict[int, tuple[int, ...]] = {}
    ws: dict[int, int] = {}
    order = tree.postorder()
    for i in order:
        node = tree.nodes[i]
        xs[i] = {x: b.var(f"n{i}:x:{src.name(x)}") for x in sorted(node.bag)}
        if node.kind == Kind.INTRO_CLAUSE:
            ws[i] = b.var(f"n{i}:w:1")
        ss[i] = b.group(f"n{i}:s", M)
    for i in order:
        node = tree.nodes[i]
        p = parent[i]
        if p is not None:
            for x, v in xs[i].items():
                if x in xs[p]:
                    b.equal(v, xs[p][x])
        kids = node.children
        if node.kind == Kind.LEAF:
            for s in ss[i]:
                b.add((-(s + 1),))
        elif node.kind in (Kind.INTRO, Kind.FORGET):
            for s, t in zip(ss[i], ss[kids[0]]):
                b.equal(s, t)
        elif node.kind == Kind.INTRO_CLAUSE:
            wi = ws[i]
            lits = [(xs[i][abs(l) - 1] + 1) * (1 if l > 0 else -1)
                    for l in src.clauses[node.item].lits]
            b.add([-(wi + 1)] + lits)
            for l in lits:
                b.add((-l, wi + 1))
            b.constrain(adder(ss[i], ss[kids[0]], (wi,)))
        elif node.kind == Kind.JOIN:
            b.constrain(adder(ss[i], ss[kids[0]], ss[kids[1]]))
        else:
            raise InstanceError(f"node {i} is not nice")
    b.constrain(geq_const(ss[tree.root], k))
    out = b.build()

    claimed = w + C_MAX2SAT * M
    sched = EliminationSchedule()
    for i in order:
        Y = list(xs[i].values())
        rest = list(ss[i]) + ([ws[i]] if i in ws else [])
        p = parent[i]
        if p is None:
            sched.add(EliminationStep(tuple(Y + rest), SUBSET, claimed, label=f"root {i}"))
            continue
        sched.add(EliminationStep.matching(Y, xs[p].values(), claimed, label=f"Y {i}"))
        sched.add(EliminationStep(tuple(rest), SUBSET, claimed, label=f"s,w {i}"))
    graph = primal_graph(out)
    cert, run = _certificate(graph, sched, "max2sat_to_sat")
    bound = BoundRecord(w, "w + c*ceil(log2(m+1))", C_MAX2SAT, M, decomposition_width(cert))
    extras = {"M": M, "m": m, "layout": list(range(out.num_vars)), "source_path": ntd.is_path,
              "step_degrees": run.degrees}
    return ReductionOutput("max2sat_to_sat", out, cert, bound,
                           "satisfiable <=> at least k clauses satisfiable",
                           MAX2SAT, SAT, extras)


# -- SAT -> 3-SAT -----------------------------------------------------------

def sat_to_3sat(src: CnfInstance, td: TreeDecomposition | None = None) -> ReductionOutput:
    """Chain every long clause through fresh variables y_1..y_{l-3}."""
    td = single_bag(src) if td is None else td
    rep = validate_decomposition(primal_graph(src), td)
    if not rep.ok:
        raise InstanceError(f"decomposition is not valid for the formula: {rep}")
    w = decomposition_width(td)
    names = [src.name(v) for v in range(src.num_vars)]
    clauses = []
    fresh: dict[int, list[int]] = {}
    for ci, c in enumerate(src.clauses):
        lits = list(c.lits)
        if len(lits) <= 3:
            clauses.append(c)
            continue
        ys = []
        for j in range(len(lits) - 3):
            ys.append(len(names))
            names.append(f"c{ci + 1}:y:{j + 1}")
        fresh[ci] = ys
        Y = [y + 1 for y in ys]
        clauses.append(Clause((lits[0], lits[1], Y[0]), c.mult))
        for j in range(1, len(Y)):
            clauses.append(Clause((-Y[j - 1], lits[j + 1], Y[j]), c.mult))
        clauses.append(Clause((-Y[-1], lits[-2], lits[-1]), c.mult))
    out = CnfInstance(len(names), tuple(clauses), None, 3, tuple(names))

    claimed = w + C_SAT3
    sched = EliminationSchedule()
    for ci, ys in fresh.items():
        sched.add(EliminationStep.layered([[y] for y in ys], claimed, label=f"clause {ci}"))
    graph = primal_graph(out)
    cert, run = certify(graph, sched, td)
    bound = BoundRecord(w, "w + 2", C_SAT3, 1, decomposition_width(cert))
    extras = {"fresh": fresh, "step_degrees": run.degrees, "source_path": td.is_path}
    if td.is_path:
        extras["layout"] = _sat3_layout(src, td, fresh)
    return ReductionOutput("sat_to_3sat", out, cert, bound, "equisatisfiable", SAT, SAT, extras)


def _sat3_layout(src: CnfInstance, td: TreeDecomposition, fresh) -> list[int]:
    """Sweep a nice path from leaf to root: IntroV x emits x, IntroC emits its y's."""
    ntd = td if td.is_nice else normalize_nice(src, td, "path")
    order: list[int] = []
    seen: set[int] = set()
    for i in ntd.postorder():
        node = ntd.nodes[i]
        if node.kind == Kind.INTRO and node.item not in seen:
            seen.add(node.item)
            order.append(node.item)
        elif node.kind == Kind.INTRO_CLAUSE:
            order.extend(fresh.get(node.item, ()))
    order.extend(v for v in range(src.num_vars) if v not in seen)
    return order


# -- 3-SAT -> Independent Set ----------------------------------------------

class ThreeSatIs:
    """Builds the gadget graph node by node, recording what each node owns."""

    def __init__(self, src: CnfInstance, ntd: TreeDecomposition):
        self.src = src
        self.ntd = ntd
        self.w = decomposition_width(ntd)
        self.M = bits_needed(self.w + 1)
        self.b = IsBuilder()
        self.parent = ntd.parent
        self.ports: dict[int, dict[int, VarPort]] = {}
        self.S: dict[int, CountingGadget] = {}     # child counting gadget of node i
        self.T: dict[int, CountingGadget] = {}     # parent counting gadget of node i
        self.clause_vertices: dict[int, list[int]] = {}
        self.sum_parts: dict[int, list[list[int]]] = {}
        self.owned: dict[int, range] = {}
        for i in ntd.postorder():
            self._node(i)

    def shared(self, i: int) -> list[int]:
        p = self.parent[i]
        if p is None:
            return []
        return sorted(self.ntd.nodes[i].bag & self.ntd.nodes[p].bag)

    def _node(self, i: int) -> None:
        b, node, src = self.b, self.ntd.nodes[i], self.src
        start = b.num_vertices
        P = set(self.shared(i))
        kids = node.children
        if self.parent[i] is not None:
            self.S[i] = CountingGadget(b, self.M, f"n{i}:S")
        for c in kids:
            self.T[c] = CountingGadget(b, self.M, f"n{c}:T")
        ports = {}
        for x in sorted(node.bag):
            port = b.variable(f"n{i}:x:{src.name(x)}")
            ports[x] = port
            for c in kids:
                if x in self.ports[c]:
                    b.edge(self.ports[c][x].neg, port.pos)
            if x in P:
                self.S[i].add(port.pos)
            for c in kids:
                if x in self.ports[c]:
                    self.T[c].add(port.neg)
        self.ports[i] = ports
        if node.kind == Kind.INTRO_CLAUSE:
            lits = [(ports[abs(l) - 1], l > 0) for l in src.clauses[node.item].lits]
            if len(lits) > 3:
                raise InstanceError(f"clause {node.item} has more than three literals")
            self.clause_vertices[i] = b.clause(lits, f"n{i}:C")
        if i in self.S:
            self.S[i].finish()
        for c in kids:
            self.T[c].finish()
            self.sum_parts[c] = b.constraint(
                LEQ_SUM_CONST, [self.S[c].last, self.T[c].last], len(self.shared(c)),
                name=f"n{c}:sum")
        self.owned[i] = range(start, b.num_vertices)

    def aux_parts(self) -> list[list[int]]:
        out = []
        for g in list(self.S.values()) + list(self.T.values()):
            out.extend(g.aux_parts)
        for parts in self.sum_parts.values():
            out.extend(parts)
        return out

    def node_sequence(self, i: int) -> list[int]:
        """The vertices owned by node i, in sweep order.

        The x_i sides, the clause gadget, the child counting gadget layer by
        layer, the x-bar_i sides, then each child's parent counting gadget
        followed by the sum block closing off its last layer.
        """
        order = [p.pos for p in self.ports[i].values()]
        order.extend(self.clause_vertices.get(i, ()))
        if i in self.S:
            order.extend(self.S[i].sequence)
        order.extend(p.neg for p in self.ports[i].values())
        for c in self.ntd.nodes[i].children:
            order.extend(self.T[c].sequence)
            for part in self.sum_parts[c]:
                order.extend(part)
        return order

    def sweep_layout(self) -> list[int]:
        """Vertex order of the path sweep, node by node from the leaf end."""
        order: list[int] = []
        for i in self.ntd.postorder():
            order.extend(self.node_sequence(i))
        return order

    def schedule(self, claimed: int | None) -> EliminationSchedule:
        sched = EliminationSchedule()
        for part in self.aux_parts():
            sched.add(EliminationStep(tuple(part), SUBSET, claimed, label="aux clause"))
        for i in self.ntd.postorder():
            Y = [p.pos for p in self.ports[i].values()]
            Ybar = [p.neg for p in self.ports[i].values()]
            C = self.clause_vertices.get(i, [])
            p = self.parent[i]
            if i in self.S:
                sched.add(EliminationStep.layered(self.S[i].layer_vertices, claimed, f"S {i}"))
            if p is not None:
                sched.add(EliminationStep.matching(Y, Ybar, claimed, f"Y {i}"))
            else:
                sched.add(EliminationStep(tuple(Y), SUBSET, claimed, label=f"Y root {i}"))
            sched.add(EliminationStep(tuple(C), SUBSET, claimed, label=f"C {i}"))
            for c in self.ntd.nodes[i].children:
                sched.add(EliminationStep.layered(self.T[c].layer_vertices, claimed, f"T {c}"))
            if p is not None:
                Yp = [q.pos for q in self.ports[p].values()]
                sched.add(EliminationStep.matching(Ybar, Yp, claimed, f"Ybar {i}"))
            else:
                sched.add(EliminationStep(tuple(Ybar), SUBSET, claimed, label=f"Ybar root {i}"))
        return sched


def threesat_to_is(src: CnfInstance, ntd: TreeDecomposition | None = None) -> ReductionOutput:
    """Graph with an independent set of size k (= gadget census) iff src is satisfiable."""
    for i, c in enumerate(src.clauses):
        if len(c.lits) > 3:
            raise InstanceError(f"clause {i} has {len(c.lits)} literals; 3-SAT needs <= 3")
    ntd = _nice_for(src, ntd)
    built = ThreeSatIs(src, ntd)
    graph = built.b.build()
    L = bits_needed(built.w + 1)
    claimed = built.w + C_3SAT_IS * L
    cert, run = _certificate(graph, built.schedule(claimed), "threesat_to_is")
    bound = BoundRecord(built.w, "w + c*ceil(log2(w+2))", C_3SAT_IS, L, decomposition_width(cert))
    extras = {"parts": built.b.parts, "census": dict(built.b.census), "M": built.M,
              "layout": built.sweep_layout(), "source_path": ntd.is_path,
              "builder": built, "step_degrees": run.degrees}
    return ReductionOutput("threesat_to_is", graph, cert, bound,
                           "independent set of size k <=> satisfiable", SAT, IS, extras)


# -- Independent Set -> Max 2-SAT ------------------------------------------

def is_to_max2sat(src: UGraph, td: TreeDecomposition | None = None,
                  k: int | None = None) -> ReductionOutput:
    """Unit clause per vertex, |V|+1 copies of (~x_u | ~x_v) per edge."""
    k = src.is_target if k is None else k
    if k is None:
        raise InstanceError("independent-set instance has no target")
    if src.vertex_set is not None:
        raise InstanceError("graph with removed vertices; renumber first")
    n = src.num_vertices
    if k > n:
        # k' would exceed the total multiplicity, which no Max 2-SAT instance can carry
        raise InstanceError(f"target {k} exceeds the {n} vertices")
    clauses = [((v + 1,), 1) for v in range(n)]
    clauses += [((-(u + 1), -(v + 1)), n + 1) for u, v in src.sorted_edges()]
    cnf = CnfInstance(n, tuple(Clause(l, m) for l, m in clauses), len(src.edges) * (n + 1) + k,
                      2, tuple(src.name(v) for v in range(n)))
    td = single_bag(src) if td is None else td
    rep = validate_decomposition(src, td)
    if not rep.ok:
        raise InstanceError(f"decomposition is not valid for the graph: {rep}")
    w = decomposition_width(td)
    bound = BoundRecord(w, "w", C_IS_MAX2SAT, 0, w)
    extras = {"source_path": td.is_path, "source_graph": src}
    return ReductionOutput("is_to_max2sat", cnf, td, bound,
                           "independent set of size k <=> k' clauses satisfiable", IS, MAX2SAT,
                           extras)


# -- path certificates ------------------------------------------------------

PATH_CONSTANTS = {"max2sat_to_sat": C_MAX2SAT, "sat_to_3sat": C_SAT3,
                  "threesat_to_is": C_3SAT_IS_PATH, "is_to_max2sat": C_IS_MAX2SAT}


def pw_certificate_for(out: ReductionOutput) -> tuple[TreeDecomposition, BoundRecord]:
    """Path-shaped certificate for a reduction that consumed a path decomposition."""
    if not out.extras.get("source_path"):
        raise InstanceError(f"{out.name}: the source decomposition is not a path")
    if out.name == "is_to_max2sat":
        return out.certificate, out.bound
    graph = out.instance if isinstance(out.instance, UGraph) else primal_graph(out.instance)
    pd = path_from_layout(graph, out.extras["layout"])
    b = out.bound
    bound = BoundRecord(b.input_width, b.formula, PATH_CONSTANTS[out.name], b.log_term,
                        decomposition_width(pd))
    return pd, bound
