"""Gadget factory shared by the reductions.

Arithmetic constraints over little-endian bit groups are compiled by
enumerating every row of the scope's truth table and blocking each
falsifying row with one clause.  The same rows, read as clauses over
variable-gadget ports, give the independent-set version.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .instances import Clause, CnfInstance, UGraph

SCOPE_CAP = 24

EQ_SUM = "eq-sum"            # (g0) = (g1) + (g2)
EQ = "eq"                    # (g0) = (g1)
EQ_CONST = "eq-const"        # (g0) = const
GEQ_CONST = "geq-const"      # (g0) >= const
LEQ_SUM_CONST = "leq-sum-const"  # (g0) + (g1) <= const
SUM_BIT = "sum-bit"          # g0 is bit j of (g1) + (g2), g1 holding bits 0..j
CUSTOM = "custom"
KINDS = (EQ_SUM, EQ, EQ_CONST, GEQ_CONST, LEQ_SUM_CONST, SUM_BIT, CUSTOM)


class GadgetError(ValueError):
    pass


def bits_needed(n: int) -> int:
    """Smallest M with 2**M > n, i.e. ceil(log2(n + 1)); at least 1."""
    return max(1, math.ceil(math.log2(n + 1))) if n > 0 else 1


def value_of(bits: Sequence[bool]) -> int:
    """Little-endian: the first bit is the least significant."""
    return sum(1 << j for j, b in enumerate(bits) if b)


@dataclass(frozen=True)
class VarGroup:
    bits: tuple[int, ...]
    role: str = ""

    def __len__(self):
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)


@dataclass(frozen=True)
class ConstraintSpec:
    kind: str
    groups: tuple[tuple[int, ...], ...]
    const: int = 0
    table: Callable[[tuple[bool, ...]], bool] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(tuple(g) for g in self.groups))
        if self.kind not in KINDS:
            raise GadgetError(f"unknown constraint kind {self.kind!r}")
        arity = {EQ_SUM: 3, EQ: 2, EQ_CONST: 1, GEQ_CONST: 1, LEQ_SUM_CONST: 2, SUM_BIT: 3}
        if self.kind in arity and len(self.groups) != arity[self.kind]:
            raise GadgetError(f"{self.kind} takes {arity[self.kind]} groups")
        if self.kind == SUM_BIT and (len(self.groups[0]) != 1
                                     or len(self.groups[2]) > len(self.groups[1])):
            raise GadgetError("sum-bit takes one output bit and two low-order prefixes")
        if self.kind == CUSTOM and self.table is None:
            raise GadgetError("custom constraint needs a table")
        if len(set(self.scope)) != len(self.scope):
            raise GadgetError("constraint scope repeats a variable")

    @property
    def scope(self) -> tuple[int, ...]:
        return tuple(v for g in self.groups for v in g)

    def holds(self, assignment: dict[int, bool] | Sequence[bool]) -> bool:
        row = tuple(bool(assignment[v]) for v in self.scope)
        return bool(_predicate(self.kind, tuple(map(len, self.groups)), self.const, self.table,
                               np.array([row], dtype=np.int64))[0])


def eq_sum(s, a, b) -> ConstraintSpec:
    return ConstraintSpec(EQ_SUM, (tuple(s), tuple(a), tuple(b)))


def eq(a, b) -> ConstraintSpec:
    return ConstraintSpec(EQ, (tuple(a), tuple(b)))


def eq_const(s, k: int) -> ConstraintSpec:
    return ConstraintSpec(EQ_CONST, (tuple(s),), k)


def geq_const(s, k: int) -> ConstraintSpec:
    return ConstraintSpec(GEQ_CONST, (tuple(s),), k)


def leq_sum_const(a, b, k: int) -> ConstraintSpec:
    return ConstraintSpec(LEQ_SUM_CONST, (tuple(a), tuple(b)), k)


def sum_bit(out_bit, a_prefix, b_prefix) -> ConstraintSpec:
    """out_bit equals bit j of a + b; a_prefix holds bits 0..j of a, b_prefix at most as many of b."""
    return ConstraintSpec(SUM_BIT, ((out_bit,), tuple(a_prefix), tuple(b_prefix)))


def adder(s, a, b) -> list[ConstraintSpec]:
    """(s) = (a) + (b) as one sum-bit constraint per output bit plus an overflow guard.

    Bit j of a sum depends only on bits 0..j of the summands, so the
    system is equivalent to eq_sum(s, a, b) while every scope is a subset
    of its scope.
    """
    s, a, b = tuple(s), tuple(a), tuple(b)
    if len(a) != len(s) or len(b) > len(s):
        raise GadgetError("adder needs len(a) == len(s) >= len(b)")
    out = [sum_bit(s[j], a[:j + 1], b[:j + 1]) for j in range(len(s))]
    out.append(leq_sum_const(a, b, (1 << len(s)) - 1))
    return out


def custom(scope, table) -> ConstraintSpec:
    return ConstraintSpec(CUSTOM, (tuple(scope),), table=table)


def _predicate(kind, lengths, const, table, rows: np.ndarray) -> np.ndarray:
    vals = []
    start = 0
    for n in lengths:
        weights = 1 << np.arange(n, dtype=np.int64)
        vals.append(rows[:, start:start + n] @ weights)
        start += n
    if kind == EQ_SUM:
        return vals[0] == vals[1] + vals[2]
    if kind == EQ:
        return vals[0] == vals[1]
    if kind == EQ_CONST:
        return vals[0] == const
    if kind == GEQ_CONST:
        return vals[0] >= const
    if kind == LEQ_SUM_CONST:
        return vals[0] + vals[1] <= const
    if kind == SUM_BIT:
        j = lengths[1] - 1
        return vals[0] == (((vals[1] + vals[2]) >> j) & 1)
    return np.array([bool(table(tuple(bool(b) for b in r))) for r in rows], dtype=bool)


def _all_rows(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.int64)


@lru_cache(maxsize=512)
def _falsifying(kind, lengths, const) -> tuple[tuple[bool, ...], ...]:
    rows = _all_rows(sum(lengths))
    ok = _predicate(kind, lengths, const, None, rows)
    return tuple(tuple(bool(b) for b in r) for r in rows[~ok])


def falsifying_rows(spec: ConstraintSpec, cap: int = SCOPE_CAP) -> tuple[tuple[bool, ...], ...]:
    n = len(spec.scope)
    if n > cap:
        raise GadgetError(f"constraint scope {n} exceeds the cap {cap}")
    if spec.kind == CUSTOM:
        rows = _all_rows(n)
        ok = _predicate(CUSTOM, (n,), 0, spec.table, rows)
        return tuple(tuple(bool(b) for b in r) for r in rows[~ok])
    return _falsifying(spec.kind, tuple(map(len, spec.groups)), spec.const)


def blocking_lits(scope: Sequence[int], row: Sequence[bool]) -> tuple[int, ...]:
    """The clause falsified by exactly this row."""
    return tuple(-(v + 1) if bit else v + 1 for v, bit in zip(scope, row))


def compile_constraint(spec: ConstraintSpec, cap: int = SCOPE_CAP) -> list[Clause]:
    scope = spec.scope
    return [Clause(blocking_lits(scope, row)) for row in falsifying_rows(spec, cap)]


# -- CNF builder ------------------------------------------------------------

class CnfBuilder:
    """Allocates named variables in creation order and collects clauses."""

    def __init__(self, cap: int = SCOPE_CAP):
        self.names: list[str] = []
        self.index: dict[str, int] = {}
        self.clauses: list[Clause] = []
        self.cap = cap

    def var(self, name: str) -> int:
        if name in self.index:
            raise GadgetError(f"variable {name!r} allocated twice")
        self.index[name] = len(self.names)
        self.names.append(name)
        return self.index[name]

    def group(self, prefix: str, width: int) -> tuple[int, ...]:
        return tuple(self.var(f"{prefix}:{j + 1}") for j in range(width))

    def add(self, lits: Iterable[int], mult: int = 1) -> None:
        self.clauses.append(Clause(tuple(lits), mult))

    def equal(self, a: int, b: int) -> None:
        self.add((-(a + 1), b + 1))
        self.add((a + 1, -(b + 1)))

    def constrain(self, spec: ConstraintSpec | Iterable[ConstraintSpec]) -> None:
        for sp in [spec] if isinstance(spec, ConstraintSpec) else spec:
            self.clauses.extend(compile_constraint(sp, self.cap))

    def build(self, target: int | None = None, max_clause_len: int | None = None) -> CnfInstance:
        return CnfInstance(len(self.names), tuple(self.clauses), target, max_clause_len,
                           tuple(self.names))


# -- independent-set gadgets -----------------------------------------------

class VarPort(NamedTuple):
    pos: int   # vertex x: chosen means true
    neg: int   # vertex x-bar

    def side(self, value: bool) -> int:
        return self.pos if value else self.neg


@dataclass
class IsGadgetFragment:
    vertices: list[int]
    edges: list[tuple[int, int]]
    census: dict[str, int]
    ports: dict[str, object]


class IsBuilder:
    """Graph under construction together with its clique partition."""

    def __init__(self, cap: int = SCOPE_CAP):
        self.names: list[str] = []
        self.edges: set[tuple[int, int]] = set()
        self.parts: list[list[int]] = []
        self.part_kind: list[str] = []
        self.census = {"var": 0, "clause": 0}
        self.cap = cap

    @property
    def num_vertices(self) -> int:
        return len(self.names)

    def vertex(self, name: str) -> int:
        self.names.append(name)
        return len(self.names) - 1

    def edge(self, u: int, v: int) -> None:
        if not (0 <= u < len(self.names) and 0 <= v < len(self.names)):
            raise GadgetError(f"edge {(u, v)} touches a vertex that does not exist")
        if u == v:
            raise GadgetError("self-loop")
        self.edges.add((u, v) if u < v else (v, u))

    def variable(self, name: str) -> VarPort:
        p = VarPort(self.vertex(name), self.vertex(name + "~"))
        self.edge(p.pos, p.neg)
        self.parts.append([p.pos, p.neg])
        self.part_kind.append("var")
        self.census["var"] += 1
        return p

    def clause(self, literals: Sequence[tuple[VarPort, bool]], name: str = "c") -> list[int]:
        """One clique vertex per literal, each tied to the side that falsifies it."""
        if not literals:
            raise GadgetError("clause gadget needs at least one literal")
        cs = [self.vertex(f"{name}:{i + 1}") for i in range(len(literals))]
        for i, (port, polarity) in enumerate(literals):
            self.edge(cs[i], port.side(not polarity))
        for i in range(len(cs)):
            for j in range(i + 1, len(cs)):
                self.edge(cs[i], cs[j])
        self.parts.append(cs)
        self.part_kind.append("clause")
        self.census["clause"] += 1
        return cs

    def constraint(self, kind: str, groups: Sequence[Sequence[VarPort]], const: int = 0,
                   name: str = "k") -> list[list[int]]:
        """Clause gadgets for every falsifying row of an arithmetic constraint."""
        flat = [p for g in groups for p in g]
        local, start = [], 0
        for g in groups:
            local.append(tuple(range(start, start + len(g))))
            start += len(g)
        spec = ConstraintSpec(kind, tuple(local), const)
        out = []
        for r, row in enumerate(falsifying_rows(spec, self.cap)):
            lits = [(flat[i], not bit) for i, bit in enumerate(row)]
            out.append(self.clause(lits, f"{name}:{r + 1}"))
        return out

    @property
    def target(self) -> int:
        return self.census["var"] + self.census["clause"]

    def build(self) -> UGraph:
        return UGraph(len(self.names), frozenset(self.edges), self.target, tuple(self.names))


def is_variable_gadget(builder: IsBuilder, name: str = "x") -> IsGadgetFragment:
    p = builder.variable(name)
    return IsGadgetFragment([p.pos, p.neg], [(p.pos, p.neg)], {"var": 1, "clause": 0},
                            {"x": p.pos, "x~": p.neg, "port": p})


def is_clause_gadget(builder: IsBuilder, literal_ports: Sequence[tuple[VarPort, bool]],
                     name: str = "c") -> IsGadgetFragment:
    before_edges = set(builder.edges)
    cs = builder.clause(literal_ports, name)
    return IsGadgetFragment(cs, sorted(builder.edges - before_edges), {"var": 0, "clause": 1},
                            {f"c{i + 1}": c for i, c in enumerate(cs)})


class CountingGadget:
    """Layers y_a, s_{a,*} for each watched vertex, then the last layer.

    ``add(u)`` appends layer a (and the adder gadgets from layer a-1);
    ``finish()`` appends the last layer.  Vertices are created in that
    order, which the path layouts rely on.
    """

    def __init__(self, builder: IsBuilder, M: int, name: str = "cnt"):
        self.b = builder
        self.M = M
        self.name = name
        self.layers: list[tuple[VarPort | None, tuple[VarPort, ...]]] = []
        self.watched: list[int] = []
        self.layer_vertices: list[list[int]] = []
        self.aux_parts: list[list[int]] = []   # clause gadgets other than the watched wiring
        self.last: tuple[VarPort, ...] | None = None
        self.sequence: list[int] = []          # own vertices in creation order

    def _layer(self, with_y: bool) -> tuple[VarPort | None, tuple[VarPort, ...]]:
        a = len(self.layers) + 1
        start = self.b.num_vertices
        y = self.b.variable(f"{self.name}:y{a}") if with_y else None
        s = tuple(self.b.variable(f"{self.name}:s{a}.{j + 1}") for j in range(self.M))
        self.layer_vertices.append(list(range(start, self.b.num_vertices)))
        if not self.layers:
            for j, port in enumerate(s):
                self.aux_parts.append(self.b.clause([(port, False)], f"{self.name}:z{j + 1}"))
        else:
            # (s) = (ps) + py, one output bit at a time, plus no overflow
            py, ps = self.layers[-1]
            tag = f"{self.name}:add{a - 1}"
            for j in range(self.M):
                self.aux_parts.extend(self.b.constraint(
                    SUM_BIT, [[s[j]], ps[:j + 1], [py]], name=f"{tag}.{j + 1}"))
            self.aux_parts.extend(self.b.constraint(
                LEQ_SUM_CONST, [ps, [py]], (1 << self.M) - 1, name=f"{tag}.ovf"))
        self.layers.append((y, s))
        self.sequence.extend(range(start, self.b.num_vertices))
        return y, s

    def add(self, u: int) -> VarPort:
        if self.last is not None:
            raise GadgetError("counting gadget already finished")
        if len(self.watched) + 1 > (1 << self.M) - 1:
            raise GadgetError(f"M={self.M} bits cannot count {len(self.watched) + 1} vertices")
        y, _ = self._layer(True)
        self.b.edge(u, y.neg)
        self.watched.append(u)
        return y

    def finish(self) -> tuple[VarPort, ...]:
        d = len(self.watched)
        if self.M < bits_needed(d):
            raise GadgetError(f"M={self.M} is too small for d={d}")
        _, s = self._layer(False)
        self.last = s
        return s

    @property
    def last_vertices(self) -> list[int]:
        return self.layer_vertices[-1]


def is_counting_gadget(builder: IsBuilder, watched: Sequence[int], M: int,
                       name: str = "cnt") -> IsGadgetFragment:
    if M < bits_needed(len(watched)):
        raise GadgetError(f"M={M} is too small for d={len(watched)}")
    before = builder.num_vertices
    before_edges = set(builder.edges)
    before_census = dict(builder.census)
    g = CountingGadget(builder, M, name)
    for u in watched:
        g.add(u)
    last = g.finish()
    census = {k: builder.census[k] - before_census[k] for k in before_census}
    return IsGadgetFragment(list(range(before, builder.num_vertices)),
                            sorted(builder.edges - before_edges), census,
                            {"last": last, "gadget": g})
