"""Verifier machines with a k-bit tape, and their compilation to SAT.

A machine has four binary tapes: a read-only input tape, a read-once
certificate tape, a k-bit work tape and a small logspace work tape.  One
transition reads the symbol under every head and is keyed by
(q, cI, cK, cL, cC).  Entries missing from the table make the machine stay
put, so a halted run repeats its configuration until the time bound.

`.tm` files:

    states: q0 q1 acc
    start: q0
    accept: acc
    k: 3
    time: 20
    space: 1
    trans:
    q0 1 0 0 1  q1 1 0 0 +1 0 +1      # q cI cK cL cC  q' c'K c'L dI dK dL dC
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

from .gadgets import CnfBuilder, bits_needed
from .instances import DecompNode, Kind, TreeDecomposition, decomposition_width, primal_graph, validate_decomposition
from .result import SAT, BoundRecord, ReductionOutput

C_TABLEAU = 4


class TmError(ValueError):
    pass


class Key(NamedTuple):
    q: str
    cI: int
    cK: int
    cL: int
    cC: int


class Action(NamedTuple):
    q: str
    wK: int
    wL: int
    dI: int
    dK: int
    dL: int
    dC: int


@dataclass(frozen=True)
class TmSpec:
    states: tuple[str, ...]
    start: str
    accept: str
    delta: dict[Key, Action]
    k: int
    time: int
    space: int = 1

    def __post_init__(self):
        if len(set(self.states)) != len(self.states):
            raise TmError("duplicate state names")
        st = set(self.states)
        if self.start not in st or self.accept not in st:
            raise TmError("start and accept must be declared states")
        if self.k < 1 or self.space < 1 or self.time < 1:
            raise TmError("k, space and time must be positive")
        for key, act in self.delta.items():
            if key.q not in st or act.q not in st:
                raise TmError(f"transition {key} uses an undeclared state")
            if any(b not in (0, 1) for b in (key.cI, key.cK, key.cL, key.cC, act.wK, act.wL)):
                raise TmError(f"transition {key}: symbols are binary")
            if any(d not in (-1, 0, 1) for d in (act.dI, act.dK, act.dL)):
                raise TmError(f"transition {key}: moves are -1, 0 or +1")
            if act.dC not in (0, 1):
                raise TmError(f"transition {key}: the certificate head only moves forward")

    def with_bounds(self, k=None, time=None, space=None) -> "TmSpec":
        return replace(self, k=self.k if k is None else k, time=self.time if time is None else time,
                       space=self.space if space is None else space)

    def step(self, key: Key) -> Action:
        """Table lookup; missing entries leave everything unchanged."""
        act = self.delta.get(key)
        if act is None:
            return Action(key.q, key.cK, key.cL, 0, 0, 0, 0)
        return act


# -- text format ------------------------------------------------------------

def _move(tok: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise TmError(f"bad head move {tok!r}") from None


def parse_tm(text: str) -> TmSpec:
    fields: dict[str, str] = {}
    delta: dict[Key, Action] = {}
    in_trans = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        if sep and head.strip() in {"states", "start", "accept", "k", "time", "space", "trans"}:
            head = head.strip()
            in_trans = head == "trans"
            if not in_trans:
                fields[head] = rest.strip()
            continue
        if not in_trans:
            raise TmError(f"line {lineno}: expected a section header")
        tok = line.split()
        if len(tok) != 12:
            raise TmError(f"line {lineno}: a transition has 12 fields, got {len(tok)}")
        try:
            key = Key(tok[0], *(int(t) for t in tok[1:5]))
            act = Action(tok[5], int(tok[6]), int(tok[7]), *(_move(t) for t in tok[8:12]))
        except ValueError as exc:
            raise TmError(f"line {lineno}: {exc}") from None
        if key in delta:
            raise TmError(f"line {lineno}: second transition for {tuple(key)}")
        delta[key] = act
    for need in ("states", "start", "accept", "k", "time"):
        if need not in fields:
            raise TmError(f"missing section {need!r}")
    try:
        return TmSpec(tuple(fields["states"].split()), fields["start"], fields["accept"], delta,
                      int(fields["k"]), int(fields["time"]), int(fields.get("space", "1")))
    except ValueError as exc:
        raise TmError(str(exc)) from None


def format_tm(tm: TmSpec, comments: Iterable[str] = ()) -> str:
    out = [f"# {c}" for c in comments]
    out += [f"states: {' '.join(tm.states)}", f"start: {tm.start}", f"accept: {tm.accept}",
            f"k: {tm.k}", f"time: {tm.time}", f"space: {tm.space}", "trans:"]
    sign = lambda d: f"{d:+d}" if d else "0"
    for key in sorted(tm.delta, key=lambda k: (tm.states.index(k.q), k[1:])):
        a = tm.delta[key]
        out.append(" ".join([key.q, *map(str, key[1:]), a.q, str(a.wK), str(a.wL),
                             *(sign(d) for d in (a.dI, a.dK, a.dL, a.dC))]))
    return "\n".join(out) + "\n"


def bits(s: str | Sequence[int]) -> tuple[int, ...]:
    if isinstance(s, str):
        s = s.strip()
        if any(ch not in "01" for ch in s):
            raise TmError(f"expected a bit string, got {s!r}")
        return tuple(int(ch) for ch in s)
    return tuple(int(b) for b in s)


# -- simulation -------------------------------------------------------------

class Outcome(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    VIOLATION = "resource-violation"


class _NeedMore(Exception):
    pass


@dataclass
class Run:
    outcome: Outcome
    steps: int                       # transitions taken before halting (or t-1)
    cert_read: int                   # certificate cells consumed
    trace: list[tuple] = field(default_factory=list)


def _run(tm: TmSpec, x: Sequence[int], cert: Sequence[int], strict: bool, keep_trace=False) -> Run:
    if not x:
        raise TmError("the input tape needs at least one cell")
    q, hI, hK, hL, hC = tm.start, 0, 0, 0, 0
    K = [0] * tm.k
    L = [0] * tm.space
    trace = []
    halted_at = None
    for i in range(1, tm.time):
        cC = cert[hC] if hC < len(cert) else 0
        key = Key(q, x[hI], K[hK], L[hL], cC)
        if strict and hC >= len(cert) and tm.delta.get(key) != tm.delta.get(key._replace(cC=1)):
            raise _NeedMore(hC)
        if keep_trace:
            trace.append((q, hI, hK, hL, hC, tuple(K), tuple(L)))
        if key not in tm.delta:
            halted_at = i - 1
            break
        a = tm.delta[key]
        K[hK], L[hL] = a.wK, a.wL
        hI, hK, hL, hC = hI + a.dI, hK + a.dK, hL + a.dL, hC + a.dC
        q = a.q
        if not (0 <= hI < len(x) and 0 <= hK < tm.k and 0 <= hL < tm.space):
            return Run(Outcome.VIOLATION, i, hC, trace)
    steps = tm.time - 1 if halted_at is None else halted_at
    out = Outcome.ACCEPT if q == tm.accept else Outcome.REJECT
    return Run(out, steps, hC, trace)


def simulate(tm: TmSpec, x, cert=()) -> Outcome:
    """Run for time-1 transitions; certificate cells past the end read 0."""
    return _run(tm, bits(x), bits(cert), strict=False).outcome


def accepting_certificates(tm: TmSpec, x) -> Iterable[tuple[int, ...]]:
    """Every certificate prefix that makes the machine accept, read exactly.

    Exhaustive: the search branches on each certificate cell the run
    actually reaches, which enumerates all certificates up to the unread
    suffix.
    """
    x = bits(x)
    stack: list[tuple[int, ...]] = [()]
    while stack:
        pre = stack.pop()
        try:
            r = _run(tm, x, pre, strict=True)
        except _NeedMore:
            stack.extend([pre + (1,), pre + (0,)])
            continue
        if r.outcome is Outcome.ACCEPT:
            yield pre


def accepts_some_certificate(tm: TmSpec, x) -> bool:
    return next(iter(accepting_certificates(tm, x)), None) is not None


def enumerate_certificates(tm: TmSpec, x, length: int) -> dict[tuple[int, ...], Outcome]:
    """Plain brute force over all certificates of one length."""
    x = bits(x)
    return {c: _run(tm, x, c, strict=False).outcome for c in itertools.product((0, 1), repeat=length)}


# -- tableau ----------------------------------------------------------------

@dataclass
class Tableau:
    """Variable indices per step (steps numbered from 1)."""

    Q: dict[int, dict[str, int]]
    HI: dict[int, tuple[int, ...]]
    HK: dict[int, tuple[int, ...]]
    HL: dict[int, tuple[int, ...]]
    TK: dict[int, tuple[int, ...]]
    TL: dict[int, tuple[int, ...]]
    TC: dict[int, int]

    def others(self, i: int) -> list[int]:
        """All step-i variables except the k-bit tape cells."""
        return [*self.Q[i].values(), *self.HI[i], *self.HK[i], *self.HL[i], *self.TL[i], self.TC[i]]

    def decode(self, model: Sequence[bool], i: int) -> dict:
        val = lambda grp: sum(1 << j for j, v in enumerate(grp) if model[v])
        states = [q for q, v in self.Q[i].items() if model[v]]
        return {"q": states[0] if len(states) == 1 else states, "hI": val(self.HI[i]),
                "hK": val(self.HK[i]), "hL": val(self.HL[i]),
                "K": tuple(int(model[v]) for v in self.TK[i]),
                "L": tuple(int(model[v]) for v in self.TL[i]), "C": int(model[self.TC[i]])}


def reachable(tm: TmSpec, x: Sequence[int]) -> list[set[tuple[str, int, int, int]]]:
    """(state, head positions) that some certificate and tape contents can reach, per step."""
    R = [set() for _ in range(tm.time + 1)]
    R[1] = {(tm.start, 0, 0, 0)}
    for i in range(1, tm.time):
        for q, hI, hK, hL in R[i]:
            for cK, cL, cC in itertools.product((0, 1), repeat=3):
                a = tm.step(Key(q, x[hI], cK, cL, cC))
                nI, nK, nL = hI + a.dI, hK + a.dK, hL + a.dL
                if 0 <= nI < len(x) and 0 <= nK < tm.k and 0 <= nL < tm.space:
                    R[i + 1].add((a.q, nI, nK, nL))
    return R


def _eq_lits(group: Sequence[int], value: int, positive: bool) -> list[int]:
    """Literals of (group)_2 = value; negated when positive is False."""
    out = []
    for j, v in enumerate(group):
        bit = (value >> j) & 1
        lit = v + 1 if bit else -(v + 1)
        out.append(lit if positive else -lit)
    return out


def compile_tm_to_sat(tm: TmSpec, x) -> ReductionOutput:
    """CNF satisfiable iff some certificate makes the machine accept within t steps."""
    x = bits(x)
    if not x:
        raise TmError("the input tape needs at least one cell")
    t, k, s, n = tm.time, tm.k, tm.space, len(x)
    wI, wK, wL = bits_needed(n - 1), bits_needed(k - 1), bits_needed(s - 1)
    R = reachable(tm, x)
    b = CnfBuilder()
    tab = Tableau({}, {}, {}, {}, {}, {}, {})
    for i in range(1, t + 1):
        live = sorted({r[0] for r in R[i]} | ({tm.accept} if i == t else set()), key=tm.states.index)
        tab.Q[i] = {q: b.var(f"{i}:Q:{q}") for q in live}
        tab.HI[i] = b.group(f"{i}:HI", wI)
        tab.HK[i] = b.group(f"{i}:HK", wK)
        tab.HL[i] = b.group(f"{i}:HL", wL)
        tab.TL[i] = b.group(f"{i}:TL", s)
        tab.TC[i] = b.var(f"{i}:TC")
        tab.TK[i] = b.group(f"{i}:TK", k)
    P = lambda v: v + 1

    b.add((P(tab.Q[1][tm.start]),))
    for v in (*tab.HI[1], *tab.HK[1], *tab.HL[1], *tab.TK[1], *tab.TL[1]):
        b.add((-P(v),))
    b.add((P(tab.Q[t][tm.accept]),))
    guards = 0
    for i in range(1, t + 1):
        for q1, q2 in itertools.combinations(tab.Q[i].values(), 2):
            b.add((-P(q1), -P(q2)))
        if i == t:
            break
        for cells, head in ((tab.TK, tab.HK), (tab.TL, tab.HL)):
            for h, (a, c) in enumerate(zip(cells[i], cells[i + 1])):
                for lit in _eq_lits(head[i], h, True):
                    b.add((-P(a), P(c), lit))
                    b.add((P(a), -P(c), lit))
        for q, hI, hK, hL in sorted(R[i], key=lambda r: (tm.states.index(r[0]), r[1:])):
            for cK, cL, cC in itertools.product((0, 1), repeat=3):
                a = tm.step(Key(q, x[hI], cK, cL, cC))
                guard = [P(tab.Q[i][q]), *_eq_lits(tab.HI[i], hI, True), *_eq_lits(tab.HK[i], hK, True),
                         *_eq_lits(tab.HL[i], hL, True),
                         P(tab.TK[i][hK]) if cK else -P(tab.TK[i][hK]),
                         P(tab.TL[i][hL]) if cL else -P(tab.TL[i][hL]),
                         P(tab.TC[i]) if cC else -P(tab.TC[i])]
                neg = [-l for l in guard]
                guards += 1
                nI, nK, nL = hI + a.dI, hK + a.dK, hL + a.dL
                if not (0 <= nI < n and 0 <= nK < k and 0 <= nL < s):
                    b.add(neg)
                    continue
                cons = [P(tab.Q[i + 1][a.q]),
                        P(tab.TK[i + 1][hK]) if a.wK else -P(tab.TK[i + 1][hK]),
                        P(tab.TL[i + 1][hL]) if a.wL else -P(tab.TL[i + 1][hL]),
                        *_eq_lits(tab.HI[i + 1], nI, True), *_eq_lits(tab.HK[i + 1], nK, True),
                        *_eq_lits(tab.HL[i + 1], nL, True)]
                if a.dC == 0:
                    cons.append(P(tab.TC[i + 1]) if cC else -P(tab.TC[i + 1]))
                for lit in cons:
                    b.add(neg + [lit])
    cnf = b.build()
    pd = tableau_path(tab, t)
    rep = validate_decomposition(primal_graph(cnf), pd)
    if not rep.ok:
        raise AssertionError(f"tableau path decomposition invalid: {rep}")
    size = t * s * n * len(tm.states)
    log_term = max(1, (size - 1).bit_length())
    bound = BoundRecord(k, "k + c*ceil(log2(t*s*|x|*|Q|))", C_TABLEAU, log_term, decomposition_width(pd))
    extras = {"tableau": tab, "reachable": R, "guards": guards, "source_path": True,
              "bits": {"I": wI, "K": wK, "L": wL}}
    return ReductionOutput("compile_tm_to_sat", cnf, pd, bound,
                           "satisfiable <=> some certificate is accepted", "tm", SAT, extras)


def tableau_path(tab: Tableau, t: int) -> TreeDecomposition:
    """The step-by-step sweep.

    Start from the k-bit cells and other variables of step 1.  For each
    step, bring in the next step's other variables, then swap the k-bit
    cells over one at a time, then drop the old step's other variables.
    """
    bags: list[frozenset[int]] = []
    for i in range(1, t):
        X, Xn = tab.others(i), tab.others(i + 1)
        cur, nxt = list(tab.TK[i]), list(tab.TK[i + 1])
        for h in range(len(cur)):
            bags.append(frozenset(X + Xn + cur[h:] + nxt[:h + 1]))
    if t == 1:
        bags.append(frozenset(tab.others(1) + list(tab.TK[1])))
    nodes = [DecompNode(bg, Kind.PLAIN, None, (j + 1,) if j + 1 < len(bags) else ())
             for j, bg in enumerate(bags)]
    return TreeDecomposition(tuple(nodes), 0, is_path=True)


def decode_run(out: ReductionOutput, model: Sequence[bool]) -> list[dict]:
    tab: Tableau = out.extras["tableau"]
    return [tab.decode(model, i) for i in sorted(tab.Q)]


# -- demo machines ----------------------------------------------------------

class MachineBuilder:
    """Write transitions with wildcards; `None` read symbols expand to both values."""

    def __init__(self, start: str, accept: str):
        self.states: list[str] = []
        self.start, self.accept = start, accept
        self.delta: dict[Key, Action] = {}
        self.state(start)
        self.state(accept)

    def state(self, q: str) -> str:
        if q not in self.states:
            self.states.append(q)
        return q

    def rule(self, q, q2, cI=None, cK=None, cL=None, cC=None, wK=None, wL=None,
             dI=0, dK=0, dL=0, dC=0):
        self.state(q)
        self.state(q2)
        for ci, ck, cl, cc in itertools.product(*[(v,) if v is not None else (0, 1)
                                                  for v in (cI, cK, cL, cC)]):
            key = Key(q, ci, ck, cl, cc)
            if key in self.delta:
                raise TmError(f"overlapping rules for {tuple(key)}")
            self.delta[key] = Action(q2, ck if wK is None else wK, cl if wL is None else wL,
                                     dI, dK, dL, dC)

    def build(self, k: int, time: int, space: int = 1) -> TmSpec:
        return TmSpec(tuple(self.states), self.start, self.accept, dict(self.delta), k, time, space)


def immediate_accept(k: int = 1, time: int = 1) -> TmSpec:
    return TmSpec(("acc",), "acc", "acc", {}, k, time, 1)


def permcheck_machine(k: int, time: int | None = None) -> TmSpec:
    """Reads one certificate index per input 1 and marks that k-bit cell.

    Indices are fixed-width binary, least significant bit first.  A mark on
    an already marked cell, or an index >= k, rejects; reaching the input's
    first 0 accepts.  Head positions live in the state, so every walk back
    to cell 0 is exact.
    """
    w = bits_needed(k - 1)
    mb = MachineBuilder("top", "acc")
    mb.rule("top", "acc", cI=0)
    mb.rule("top", "r0:0", cI=1)
    for j in range(w):
        for v in range(1 << j):
            for bit in (0, 1):
                nv = v | (bit << j)
                nxt = f"r{j + 1}:{nv}" if j + 1 < w else f"go:{nv}:{nv}"
                if j + 1 == w and nv >= k:
                    nxt = "rej"
                mb.rule(f"r{j}:{v}", nxt, cC=bit, dC=1)
    for v in range(k):
        for left in range(v, 0, -1):
            mb.rule(f"go:{v}:{left}", f"go:{v}:{left - 1}", dK=1)
        back = f"back:{v}" if v else "next"
        mb.rule(f"go:{v}:0", "rej", cK=1)
        mb.rule(f"go:{v}:0", back, cK=0, wK=1)
    for left in range(k - 1, 0, -1):
        mb.rule(f"back:{left}", f"back:{left - 1}" if left > 1 else "next", dK=-1)
    mb.rule("next", "top", dI=1)
    mb.state("rej")
    need = 1 + k * (w + 2 * (k - 1) + 3)
    return mb.build(k, time or need + 1)


def hamilton_machine(n: int, time: int | None = None) -> TmSpec:
    """Directed Hamiltonicity verifier; the input is the n*n adjacency matrix, row-major.

    The certificate lists the cycle's vertices, each in fixed-width binary
    (least significant bit first).  Every vertex read is marked on the k-bit
    tape (k = n) and a second visit rejects.  Each consecutive arc, and the
    closing arc back to the first vertex, is looked up on the input tape.
    """
    w = bits_needed(n - 1)
    mb = MachineBuilder("rd:0:-:-:0:0", "acc")

    def read_states(c, first, prev):
        f = "-" if first is None else first
        p = "-" if prev is None else prev
        for j in range(w):
            for v in range(1 << j):
                for bit in (0, 1):
                    nv = v | (bit << j)
                    if j + 1 < w:
                        nxt = f"rd:{c}:{f}:{p}:{j + 1}:{nv}"
                    elif nv >= n:
                        nxt = "rej"
                    else:
                        nxt = f"mk:{c}:{f if first is not None else nv}:{p}:{nv}:{nv}"
                    mb.rule(f"rd:{c}:{f}:{p}:{j}:{v}", nxt, cC=bit, dC=1)

    for c in range(n):
        firsts = [None] if c == 0 else range(n)
        for first in firsts:
            prevs = [None] if c == 0 else range(n)
            for prev in prevs:
                read_states(c, first, prev)
        for first in range(n):
            for prev in ([None] if c == 0 else range(n)):
                p = "-" if prev is None else prev
                for v in range(n):
                    tag = f"{c}:{first}:{p}:{v}"
                    # mark cell v of the k-bit tape, then walk back
                    for left in range(v, 0, -1):
                        mb.rule(f"mk:{tag}:{left}", f"mk:{tag}:{left - 1}", dK=1)
                    mb.rule(f"mk:{tag}:0", "rej", cK=1)
                    mb.rule(f"mk:{tag}:0", f"bk:{tag}:{v}" if v else f"arc:{tag}", cK=0, wK=1)
                    for left in range(v, 0, -1):
                        mb.rule(f"bk:{tag}:{left}", f"bk:{tag}:{left - 1}" if left > 1 else f"arc:{tag}",
                                dK=-1)
                    # arc prev -> v, and on the last vertex the closing arc v -> first
                    after = f"rd:{c + 1}:{first}:{v}:0:0" if c < n - 1 else f"cl:{tag}"
                    if prev is None:
                        mb.rule(f"arc:{tag}", after)
                    else:
                        _lookup(mb, f"arc:{tag}", prev * n + v, after)
                    if c == n - 1:
                        _lookup(mb, f"cl:{tag}", v * n + first, "acc")
    mb.state("rej")
    per = w + 2 * (n - 1) + 2 + 2 * (n * n) + 2
    return mb.build(n, time or n * per + n * n * 2 + 4)


def _lookup(mb: MachineBuilder, q: str, pos: int, ok: str) -> None:
    """From input cell 0: walk to `pos`, reject on 0, walk back, continue at `ok`."""
    cur = q
    for step in range(pos):
        nxt = f"{q}>{step + 1}"
        mb.rule(cur, nxt, dI=1)
        cur = nxt
    back = f"{q}<{pos}" if pos else ok
    mb.rule(cur, "rej", cI=0)
    mb.rule(cur, back, cI=1)
    for left in range(pos, 0, -1):
        mb.rule(f"{q}<{left}", f"{q}<{left - 1}" if left > 1 else ok, dI=-1)


def adjacency_input(n: int, arcs: Iterable[tuple[int, int]]) -> str:
    m = [["0"] * n for _ in range(n)]
    for u, v in arcs:
        m[u][v] = "1"
    return "".join("".join(row) for row in m)
