"""Ground truth.

Exhaustive solvers for desk-scale instances, a tree-decomposition DP for
independent set, and pysat-backed deciders for the (much larger) targets
of the reductions.  Every witness is re-verified before it is returned.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence

from pysat.card import CardEnc, EncType
from pysat.examples.rc2 import RC2
from pysat.formula import WCNF
from pysat.solvers import Solver

from .instances import CnfInstance, Kind, TreeDecomposition, UGraph, decomposition_width
from .result import IS, MAX2SAT, SAT, ReductionOutput

DEFAULT_CAP = 26
SOLVER = "cadical153"


class CapExceeded(RuntimeError):
    pass


class OracleError(AssertionError):
    pass


def default_cap() -> int:
    return int(os.environ.get("WIDTHRED_CAP", DEFAULT_CAP))


@dataclass(frozen=True)
class OracleAnswer:
    kind: str            # sat-decision | max-count | max-size | is-decision | max2sat-decision
    value: bool | int
    witness: tuple | None = None


def _check_cap(n: int, cap: int | None, what: str) -> None:
    cap = default_cap() if cap is None else cap
    if n > cap:
        raise CapExceeded(f"{what}: {n} exceeds the exhaustive-search cap {cap}")


def _gray_walk(cnf: CnfInstance):
    """Yield (assignment, satisfied weight, all satisfied) in Gray-code order."""
    n = cnf.num_vars
    occ: list[list[tuple[int, bool]]] = [[] for _ in range(n)]
    count = [0] * cnf.num_clauses
    for ci, c in enumerate(cnf.clauses):
        for l in c.lits:
            occ[abs(l) - 1].append((ci, l > 0))
            if l < 0:
                count[ci] += 1
    mult = [c.mult for c in cnf.clauses]
    sat_w = sum(m for m, k in zip(mult, count) if k)
    unsat = sum(1 for k in count if not k)
    a = [False] * n
    yield a, sat_w, unsat == 0
    for i in range(1, 1 << n):
        v = (i & -i).bit_length() - 1
        a[v] = not a[v]
        for ci, positive in occ[v]:
            if positive == a[v]:
                count[ci] += 1
                if count[ci] == 1:
                    unsat -= 1
                    sat_w += mult[ci]
            else:
                count[ci] -= 1
                if count[ci] == 0:
                    unsat += 1
                    sat_w -= mult[ci]
        yield a, sat_w, unsat == 0


def sat_bruteforce(cnf: CnfInstance, cap: int | None = None) -> OracleAnswer:
    _check_cap(cnf.num_vars, cap, "sat_bruteforce")
    for a, _, ok in _gray_walk(cnf):
        if ok:
            w = tuple(a)
            if not cnf.is_satisfied_by(w):
                raise OracleError("gray-code bookkeeping produced a bad witness")
            return OracleAnswer("sat-decision", True, w)
    return OracleAnswer("sat-decision", False)


def max2sat_bruteforce(cnf: CnfInstance, cap: int | None = None) -> OracleAnswer:
    _check_cap(cnf.num_vars, cap, "max2sat_bruteforce")
    best, arg = -1, None
    for a, w, _ in _gray_walk(cnf):
        if w > best:
            best, arg = w, tuple(a)
    if cnf.count_satisfied(arg) != best:
        raise OracleError("gray-code bookkeeping miscounted")
    return OracleAnswer("max-count", best, arg)


def is_bruteforce(graph: UGraph, cap: int | None = None) -> OracleAnswer:
    """Maximum independent set by bitmask branch and bound."""
    verts = sorted(graph.vertices)
    _check_cap(len(verts), cap, "is_bruteforce")
    idx = {v: i for i, v in enumerate(verts)}
    nb = [0] * len(verts)
    for u, v in graph.edges:
        nb[idx[u]] |= 1 << idx[v]
        nb[idx[v]] |= 1 << idx[u]
    best = [0, 0]

    def go(cand: int, chosen: int, size: int):
        if size + bin(cand).count("1") <= best[0]:
            return
        if not cand:
            best[0], best[1] = size, chosen
            return
        # branch on the candidate with most candidate neighbours
        v, deg = -1, -1
        c = cand
        while c:
            low = c & -c
            i = low.bit_length() - 1
            d = bin(nb[i] & cand).count("1")
            if d > deg:
                v, deg = i, d
            c ^= low
        if deg == 0:
            go(0, chosen | cand, size + bin(cand).count("1"))
            return
        go(cand & ~(1 << v) & ~nb[v], chosen | (1 << v), size + 1)
        go(cand & ~(1 << v), chosen, size)

    go((1 << len(verts)) - 1, 0, 0)
    witness = tuple(verts[i] for i in range(len(verts)) if best[1] >> i & 1)
    if not graph.is_independent(witness):
        raise OracleError("branch and bound returned a dependent set")
    return OracleAnswer("max-size", best[0], witness)


def is_treewidth_dp(graph: UGraph, ntd: TreeDecomposition) -> OracleAnswer:
    """Independent-set DP over a nice decomposition; vertices are counted when forgotten."""
    adj = graph.adjacency
    tables: dict[int, dict[frozenset[int], int]] = {}
    for n in ntd.postorder():
        node = ntd.nodes[n]
        kids = [tables.pop(c) for c in node.children]
        if node.kind == Kind.LEAF:
            if node.bag:
                raise OracleError("leaf with a non-empty bag")
            t = {frozenset(): 0}
        elif node.kind == Kind.INTRO:
            v = node.item
            t = {}
            for S, val in kids[0].items():
                t[S] = val
                if not (adj[v] & S):
                    t[S | {v}] = val
        elif node.kind == Kind.FORGET:
            v = node.item
            t = {}
            for S, val in kids[0].items():
                key = S - {v}
                gain = val + (v in S)
                if gain > t.get(key, -1):
                    t[key] = gain
        elif node.kind == Kind.JOIN:
            left, right = kids
            t = {S: val + right[S] for S, val in left.items() if S in right}
        elif node.kind == Kind.INTRO_CLAUSE:
            t = kids[0]
        else:
            raise OracleError(f"node {n} is not nice ({node.kind})")
        tables[n] = t
    root = tables[ntd.root]
    best = max(val + len(S) for S, val in root.items())
    return OracleAnswer("max-size", best)


# -- solver-backed deciders -------------------------------------------------

def _solve(clauses: Sequence[Sequence[int]]) -> list[int] | None:
    with Solver(name=SOLVER, bootstrap_with=[list(c) for c in clauses]) as s:
        return s.get_model() if s.solve() else None


def sat_solve(cnf: CnfInstance) -> OracleAnswer:
    model = _solve(c.lits for c in cnf.clauses)
    if model is None:
        return OracleAnswer("sat-decision", False)
    pos = set(l for l in model if l > 0)
    a = tuple((v + 1) in pos for v in range(cnf.num_vars))
    if not cnf.is_satisfied_by(a):
        raise OracleError("solver model does not satisfy the formula")
    return OracleAnswer("sat-decision", True, a)


def verify_clique_partition(graph: UGraph, parts: Sequence[Sequence[int]]) -> bool:
    seen: set[int] = set()
    for p in parts:
        for i, u in enumerate(p):
            if u in seen or u not in graph.adjacency:
                return False
            seen.add(u)
            for v in p[i + 1:]:
                if v not in graph.adjacency[u]:
                    return False
    return seen == set(graph.vertices)


def census_maximal_sets(graph: UGraph, parts: Sequence[Sequence[int]], free: Sequence[int] = (),
                        witness_parts: Sequence[Sequence[int]] = ()):
    """Independent sets taking exactly one vertex per part and any subset of ``free``.

    Every combination of choices in ``parts`` and ``free`` that extends to a
    full solution is yielded once; for ``witness_parts`` (typically clause
    gadgets, whose choice carries no information) the first completion found
    is used.  Backtracking with forward checking.
    """
    adj = graph.adjacency
    slots = [list(p) for p in parts] + [[v] for v in free] + [list(p) for p in witness_parts]
    first_free = len(parts)
    first_witness = len(parts) + len(free)
    slot_of = {v: i for i, p in enumerate(slots) for v in p}
    open_count = [len(p) for p in slots]
    blocked: dict[int, int] = {}
    chosen: list[int] = []

    def block(v: int, d: int) -> bool:
        dead = False
        for u in adj[v]:
            b = blocked.get(u, 0)
            blocked[u] = b + d
            if b == (0 if d > 0 else 1):
                i = slot_of.get(u)
                if i is not None:
                    open_count[i] -= d
                    if open_count[i] == 0 and not first_free <= i < first_witness:
                        dead = True
        return dead

    def complete(i: int) -> list[int] | None:
        """One completion of the witness slots from i on, or None."""
        if i == len(slots):
            return []
        for v in slots[i]:
            if blocked.get(v, 0):
                continue
            dead = block(v, 1)
            rest = None if dead else complete(i + 1)
            block(v, -1)
            if rest is not None:
                return [v] + rest
        return None

    def go(i: int):
        if i == first_witness:
            rest = complete(i)
            if rest is not None:
                yield frozenset(chosen + rest)
            return
        for v in slots[i]:
            if blocked.get(v, 0):
                continue
            chosen.append(v)
            if not block(v, 1):
                yield from go(i + 1)
            block(v, -1)
            chosen.pop()
        if i >= first_free:
            yield from go(i + 1)

    yield from go(0)


def is_decide(graph: UGraph, k: int, parts: Sequence[Sequence[int]] | None = None) -> OracleAnswer:
    """Is there an independent set of size >= k?

    A clique partition, when given, is checked first; it caps the answer at
    the number of parts, and when k equals that number every solution must
    take exactly one vertex per part, which turns the question into plain SAT.
    """
    verts = sorted(graph.vertices)
    if k <= 0:
        return OracleAnswer("is-decision", True, ())
    if k > len(verts):
        return OracleAnswer("is-decision", False)
    var = {v: i + 1 for i, v in enumerate(verts)}
    clauses = [[-var[u], -var[v]] for u, v in graph.edges]
    if parts is not None:
        if not verify_clique_partition(graph, parts):
            raise OracleError("supplied parts are not a clique partition")
        if k > len(parts):
            return OracleAnswer("is-decision", False)
    if parts is not None and k == len(parts):
        clauses.extend([var[v] for v in p] for p in parts)
    else:
        enc = CardEnc.atleast([var[v] for v in verts], bound=k, top_id=len(verts),
                              encoding=EncType.seqcounter)
        clauses.extend(enc.clauses)
    model = _solve(clauses)
    if model is None:
        return OracleAnswer("is-decision", False)
    true = set(l for l in model if l > 0)
    chosen = tuple(v for v in verts if var[v] in true)
    if len(chosen) < k or not graph.is_independent(chosen):
        raise OracleError("solver returned a bad independent set")
    return OracleAnswer("is-decision", True, chosen)


def max2sat_decide(cnf: CnfInstance, k: int | None = None,
                   parts: Sequence[Sequence[int]] | None = None) -> OracleAnswer:
    """Can at least k clause copies be satisfied?

    Clauses heavier than the slack (total - k) are forced.  If what remains
    is the independent-set shape (forced negative 2-clauses, positive unit
    soft clauses, one per variable) the question goes to ``is_decide``;
    otherwise RC2 computes the optimum.
    """
    k = cnf.target if k is None else k
    total = cnf.total_weight
    if k is None:
        raise OracleError("max2sat_decide needs a target")
    if k > total:
        return OracleAnswer("max2sat-decision", False)
    slack = total - k
    hard = [c for c in cnf.clauses if c.mult > slack]
    soft = [c for c in cnf.clauses if c.mult <= slack]
    is_shape = (all(len(c.lits) == 2 and all(l < 0 for l in c.lits) for c in hard)
                and all(len(c.lits) == 1 and c.lits[0] > 0 and c.mult == 1 for c in soft)
                and sorted(c.lits[0] for c in soft) == list(range(1, cnf.num_vars + 1)))
    if is_shape:
        edges = frozenset((abs(c.lits[0]) - 1, abs(c.lits[1]) - 1) for c in hard)
        g = UGraph(cnf.num_vars, edges)
        need = k - sum(c.mult for c in hard)
        ans = is_decide(g, need, parts)
        if not ans.value:
            return OracleAnswer("max2sat-decision", False)
        chosen = set(ans.witness)
        a = tuple(v in chosen for v in range(cnf.num_vars))
    else:
        w = WCNF()
        for c in hard:
            w.append(list(c.lits))
        for c in soft:
            w.append(list(c.lits), weight=c.mult)
        with RC2(w) as rc2:
            model = rc2.compute()
        if model is None:
            return OracleAnswer("max2sat-decision", False)
        pos = set(l for l in model if l > 0)
        a = tuple((v + 1) in pos for v in range(cnf.num_vars))
    got = cnf.count_satisfied(a)
    if is_shape and got < k:
        raise OracleError("independent-set witness does not reach the target")
    return OracleAnswer("max2sat-decision", got >= k, a)


# -- dispatch ---------------------------------------------------------------

SMALL = 16


def decide(kind: str, instance, k: int | None = None, parts=None,
           exhaustive_limit: int = SMALL) -> bool:
    """Yes/no answer for a sat, max2sat or is instance."""
    if kind == SAT:
        if instance.num_vars <= exhaustive_limit:
            return bool(sat_bruteforce(instance, cap=exhaustive_limit).value)
        return bool(sat_solve(instance).value)
    if kind == MAX2SAT:
        k = instance.target if k is None else k
        if instance.num_vars <= exhaustive_limit:
            return max2sat_bruteforce(instance, cap=exhaustive_limit).value >= k
        return bool(max2sat_decide(instance, k, parts).value)
    if kind == IS:
        k = instance.is_target if k is None else k
        if instance.num_vertices <= exhaustive_limit:
            return is_bruteforce(instance, cap=exhaustive_limit).value >= k
        return bool(is_decide(instance, k, parts).value)
    raise ValueError(f"unknown problem kind {kind!r}")


@dataclass
class EquivalenceReport:
    ok: bool
    source_answer: bool | None = None
    target_answer: bool | None = None
    width: int | None = None
    claimed: int | None = None
    problems: list[str] = field(default_factory=list)

    def lines(self) -> list[str]:
        out = [f"result {'pass' if self.ok else 'fail'}",
               f"source_answer {self.source_answer}",
               f"target_answer {self.target_answer}",
               f"width {self.width}",
               f"claimed {self.claimed}"]
        out.extend(f"problem {p}" for p in self.problems)
        return out


def check_equivalence(source, out: ReductionOutput, source_answer: bool | None = None,
                      check_width: bool = True) -> EquivalenceReport:
    """Decide both sides, apply the answer map, and check the certificate."""
    rep = EquivalenceReport(ok=True)
    if source_answer is None:
        src_graph = out.extras.get("source_graph")
        if out.source_kind == IS and src_graph is not None:
            source = src_graph
        source_answer = decide(out.source_kind, source)
    rep.source_answer = source_answer
    rep.target_answer = decide(out.target_kind, out.instance, parts=out.extras.get("parts"))
    if rep.source_answer != rep.target_answer:
        rep.problems.append(
            f"answer map '{out.answer_map}' broken: source {rep.source_answer}, "
            f"target {rep.target_answer}")
    if check_width and out.certificate is not None:
        vr = out.certificate_report()
        if not vr.ok:
            rep.problems.append(f"certificate invalid: {vr}")
        else:
            rep.width = decomposition_width(out.certificate)
            rep.claimed = out.bound.claimed
            if rep.width > rep.claimed:
                rep.problems.append(f"certificate width {rep.width} exceeds claimed {rep.claimed}")
    rep.ok = not rep.problems
    return rep
