"""Readers and writers for DIMACS CNF, PACE graphs and PACE decompositions.

Every id in a file is 1-based; in memory everything is 0-based.
Extensions ride on comment lines so that plain PACE/DIMACS tools still
accept the files:

    c m2s target <k>          Max 2-SAT target (cnf)
    w <mult> l1 l2 ... 0      clause multiplicity prefix (cnf)
    c is target <k>           independent-set target (gr)
    c part v1 v2 ...          one clique of a vertex partition (gr)
    c kind <id> <Kind> [arg]  nice node kind (td)
    c root <id>               root bag (td)
    c name <id> <text>        identifier side table (cnf and gr)
"""
from __future__ import annotations

from collections import deque
from pathlib import Path
from typing import Iterable, TextIO

from .instances import (
    Clause, CnfInstance, DecompNode, Kind, TreeDecomposition, UGraph,
    decomposition_width,
)


class FormatError(ValueError):
    pass


def _lines(source: str | Path | TextIO) -> list[str]:
    if isinstance(source, Path):
        return source.read_text().splitlines()
    if isinstance(source, str):
        return source.splitlines()
    return source.read().splitlines()


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise FormatError(f"line {lineno}: expected an integer, got {tok!r}") from None


def _names_from(table: dict[int, str], n: int) -> tuple[str, ...] | None:
    if not table:
        return None
    return tuple(table.get(i, str(i + 1)) for i in range(n))


# -- cnf --------------------------------------------------------------------

def parse_dimacs(source) -> CnfInstance:
    num_vars = num_clauses = None
    target = None
    names: dict[int, str] = {}
    clauses: list[Clause] = []
    lits: list[int] = []
    mult = 1
    for lineno, raw in enumerate(_lines(source), 1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if line.startswith("c"):
            parts = line.split()
            if parts[1:3] == ["m2s", "target"] and len(parts) == 4:
                target = _int(parts[3], lineno)
            elif len(parts) >= 4 and parts[1] == "name":
                names[_int(parts[2], lineno) - 1] = " ".join(parts[3:])
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise FormatError(f"line {lineno}: bad problem line {line!r}")
            num_vars, num_clauses = _int(parts[2], lineno), _int(parts[3], lineno)
            continue
        if num_vars is None:
            raise FormatError(f"line {lineno}: clause before the problem line")
        toks = line.split()
        if toks[0] == "w":
            if lits:
                raise FormatError(f"line {lineno}: weight inside an open clause")
            if len(toks) < 2:
                raise FormatError(f"line {lineno}: missing weight")
            mult = _int(toks[1], lineno)
            toks = toks[2:]
        for tok in toks:
            v = _int(tok, lineno)
            if v == 0:
                clauses.append(Clause(tuple(lits), mult))
                lits, mult = [], 1
            else:
                lits.append(v)
    if num_vars is None:
        raise FormatError("missing 'p cnf' line")
    if lits:
        raise FormatError("last clause is not terminated by 0")
    if len(clauses) != num_clauses:
        raise FormatError(f"header announces {num_clauses} clauses, found {len(clauses)}")
    return CnfInstance(num_vars, tuple(clauses), target, names=_names_from(names, num_vars))


def format_dimacs(cnf: CnfInstance, comments: Iterable[str] = ()) -> str:
    out = [f"c {c}" for c in comments]
    if cnf.target is not None:
        out.append(f"c m2s target {cnf.target}")
    if cnf.names:
        out.extend(f"c name {i + 1} {nm}" for i, nm in enumerate(cnf.names))
    out.append(f"p cnf {cnf.num_vars} {cnf.num_clauses}")
    for c in cnf.clauses:
        body = " ".join(map(str, c.lits)) + " 0"
        out.append(f"w {c.mult} {body}" if c.mult != 1 else body)
    return "\n".join(out) + "\n"


# -- graphs -----------------------------------------------------------------

def parse_graph(source) -> tuple[UGraph, list[list[int]]]:
    """Returns the graph and the (possibly empty) clique partition."""
    n = m = None
    target = None
    parts_out: list[list[int]] = []
    names: dict[int, str] = {}
    edges = []
    for lineno, raw in enumerate(_lines(source), 1):
        line = raw.strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] == "c":
            if toks[1:3] == ["is", "target"] and len(toks) == 4:
                target = _int(toks[3], lineno)
            elif len(toks) >= 2 and toks[1] == "part":
                parts_out.append([_int(t, lineno) - 1 for t in toks[2:]])
            elif len(toks) >= 4 and toks[1] == "name":
                names[_int(toks[2], lineno) - 1] = " ".join(toks[3:])
            continue
        if toks[0] == "p":
            if len(toks) != 4 or toks[1] not in ("tw", "edge"):
                raise FormatError(f"line {lineno}: bad problem line {line!r}")
            n, m = _int(toks[2], lineno), _int(toks[3], lineno)
            continue
        if n is None:
            raise FormatError(f"line {lineno}: edge before the problem line")
        if toks[0] == "e":
            toks = toks[1:]
        if len(toks) != 2:
            raise FormatError(f"line {lineno}: edge line needs two endpoints")
        u, v = _int(toks[0], lineno) - 1, _int(toks[1], lineno) - 1
        if not (0 <= u < n and 0 <= v < n):
            raise FormatError(f"line {lineno}: endpoint out of range")
        edges.append((u, v))
    if n is None:
        raise FormatError("missing 'p tw' line")
    if len(set(frozenset(e) for e in edges)) != m:
        raise FormatError(f"header announces {m} edges, found {len(set(map(frozenset, edges)))}")
    return UGraph(n, frozenset(edges), target, _names_from(names, n)), parts_out


def format_graph(g: UGraph, parts: Iterable[Iterable[int]] = (),
                 comments: Iterable[str] = ()) -> str:
    if g.vertex_set is not None:
        raise FormatError("cannot write a graph with removed vertices")
    out = [f"c {c}" for c in comments]
    if g.is_target is not None:
        out.append(f"c is target {g.is_target}")
    for p in parts:
        out.append("c part " + " ".join(str(v + 1) for v in p))
    if g.names:
        out.extend(f"c name {i + 1} {nm}" for i, nm in enumerate(g.names))
    out.append(f"p tw {g.num_vertices} {len(g.edges)}")
    out.extend(f"{u + 1} {v + 1}" for u, v in g.sorted_edges())
    return "\n".join(out) + "\n"


# -- decompositions ---------------------------------------------------------

_KIND_ARG = {Kind.INTRO, Kind.INTRO_CLAUSE, Kind.FORGET}


def parse_td(source) -> TreeDecomposition:
    header = None
    bags: dict[int, frozenset[int]] = {}
    arcs: list[tuple[int, int]] = []
    kinds: dict[int, tuple[Kind, int | None]] = {}
    root = None
    for lineno, raw in enumerate(_lines(source), 1):
        line = raw.strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] == "c":
            if len(toks) >= 4 and toks[1] == "kind":
                try:
                    kind = Kind(toks[3])
                except ValueError:
                    raise FormatError(f"line {lineno}: unknown node kind {toks[3]!r}") from None
                arg = None
                if kind in _KIND_ARG:
                    if len(toks) != 5:
                        raise FormatError(f"line {lineno}: {kind.value} needs one argument")
                    arg = _int(toks[4], lineno) - 1
                kinds[_int(toks[2], lineno) - 1] = (kind, arg)
            elif len(toks) == 3 and toks[1] == "root":
                root = _int(toks[2], lineno) - 1
            continue
        if toks[0] == "s":
            if len(toks) != 5 or toks[1] != "td":
                raise FormatError(f"line {lineno}: bad solution line {line!r}")
            header = [_int(t, lineno) for t in toks[2:]]
            continue
        if header is None:
            raise FormatError(f"line {lineno}: content before the 's td' line")
        if toks[0] == "b":
            if len(toks) < 2:
                raise FormatError(f"line {lineno}: bag line needs an id")
            bid = _int(toks[1], lineno) - 1
            if bid in bags:
                raise FormatError(f"line {lineno}: bag {bid + 1} defined twice")
            bags[bid] = frozenset(_int(t, lineno) - 1 for t in toks[2:])
            continue
        if len(toks) != 2:
            raise FormatError(f"line {lineno}: arc line needs two ids")
        arcs.append((_int(toks[0], lineno) - 1, _int(toks[1], lineno) - 1))
    if header is None:
        raise FormatError("missing 's td' line")
    nb = header[0]
    if sorted(bags) != list(range(nb)):
        raise FormatError(f"expected bags 1..{nb}, got {len(bags)} bag lines")
    if len(arcs) != max(0, nb - 1):
        raise FormatError(f"a tree on {nb} bags has {max(0, nb - 1)} arcs, found {len(arcs)}")
    adj: dict[int, list[int]] = {i: [] for i in range(nb)}
    for a, b in arcs:
        if not (0 <= a < nb and 0 <= b < nb):
            raise FormatError(f"arc {(a + 1, b + 1)} references an unknown bag")
        adj[a].append(b)
        adj[b].append(a)
    root = 0 if root is None else root
    if not 0 <= root < nb:
        raise FormatError("root out of range")
    children: dict[int, list[int]] = {i: [] for i in range(nb)}
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                children[u].append(w)
                queue.append(w)
    if len(seen) != nb:
        raise FormatError("arcs do not connect all bags")
    nice = bool(kinds) and len(kinds) == nb
    nodes = []
    for i in range(nb):
        kind, arg = kinds.get(i, (Kind.PLAIN, None))
        nodes.append(DecompNode(bags[i], kind, arg, tuple(children[i])))
    is_path = all(len(c) <= 1 for c in children.values())
    return TreeDecomposition(tuple(nodes), root, is_path=is_path, is_nice=nice)


def format_td(td: TreeDecomposition, num_vertices: int, comments: Iterable[str] = ()) -> str:
    out = [f"c {c}" for c in comments]
    width = decomposition_width(td) if td.nodes else 0
    out.append(f"s td {len(td.nodes)} {width + 1} {num_vertices}")
    out.append(f"c root {td.root + 1}")
    for i, node in enumerate(td.nodes):
        if node.kind != Kind.PLAIN:
            arg = f" {node.item + 1}" if node.kind in _KIND_ARG else ""
            out.append(f"c kind {i + 1} {node.kind.value}{arg}")
    for i, node in enumerate(td.nodes):
        out.append(" ".join(["b", str(i + 1)] + [str(v + 1) for v in sorted(node.bag)]))
    for i in td.preorder():
        for c in td.nodes[i].children:
            out.append(f"{i + 1} {c + 1}")
    return "\n".join(out) + "\n"


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text)
