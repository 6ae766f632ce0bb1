import itertools

import pytest
from hypothesis import given, strategies as st

from widthred.gadgets import (
    CUSTOM, EQ, EQ_CONST, EQ_SUM, GEQ_CONST, LEQ_SUM_CONST, SCOPE_CAP, SUM_BIT, CnfBuilder,
    ConstraintSpec, GadgetError, IsBuilder, adder, bits_needed, compile_constraint, custom,
    eq_sum, falsifying_rows, is_clause_gadget, is_counting_gadget, is_variable_gadget,
    sum_bit, value_of,
)
from widthred.oracles import census_maximal_sets


def _val(bits):
    return sum(b << j for j, b in enumerate(bits))


def _reference(kind, groups, const, row):
    """Plain-Python meaning of each constraint kind."""
    vals, i = [], 0
    for g in groups:
        vals.append(_val(row[i:i + len(g)]))
        i += len(g)
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
        j = len(groups[1]) - 1
        return vals[0] == ((vals[1] + vals[2]) >> j) & 1
    raise AssertionError(kind)


def _groups(lengths):
    out, v = [], 0
    for n in lengths:
        out.append(tuple(range(v, v + n)))
        v += n
    return tuple(out)


CASES = [(EQ_SUM, (2, 2, 2), 0), (EQ_SUM, (3, 3, 1), 0), (EQ, (3, 3), 0), (EQ_CONST, (3,), 5),
         (GEQ_CONST, (3,), 3), (LEQ_SUM_CONST, (2, 2), 4), (SUM_BIT, (1, 3, 1), 0),
         (SUM_BIT, (1, 2, 2), 0), (SUM_BIT, (1, 1, 1), 0)]


@pytest.mark.parametrize("kind, lengths, const", CASES)
def test_falsifying_rows_match_reference(kind, lengths, const):
    groups = _groups(lengths)
    spec = ConstraintSpec(kind, groups, const)
    n = sum(lengths)
    bad = {r for r in itertools.product((False, True), repeat=n)
           if not _reference(kind, groups, const, r)}
    assert set(falsifying_rows(spec)) == bad


@pytest.mark.parametrize("kind, lengths, const", CASES)
def test_compiled_clauses_are_exact(kind, lengths, const):
    groups = _groups(lengths)
    spec = ConstraintSpec(kind, groups, const)
    clauses = compile_constraint(spec)
    for row in itertools.product((False, True), repeat=sum(lengths)):
        sat = all(c.satisfied_by(row) for c in clauses)
        assert sat == _reference(kind, groups, const, row) == spec.holds(row)


def test_custom_table():
    spec = custom((0, 1, 2), lambda r: sum(r) == 1)
    assert len(falsifying_rows(spec)) == 8 - 3
    with pytest.raises(GadgetError):
        ConstraintSpec(CUSTOM, ((0,),))


@given(st.integers(1, 3), st.data())
def test_adder_system_equals_single_sum(M, data):
    lb = data.draw(st.integers(1, M))
    s, a, b = range(M), range(M, 2 * M), range(2 * M, 2 * M + lb)
    specs = adder(s, a, b)
    ref = eq_sum(s, a, b)
    assert all(set(sp.scope) <= set(ref.scope) for sp in specs)
    for row in itertools.product((False, True), repeat=2 * M + lb):
        assert all(sp.holds(row) for sp in specs) == ref.holds(row)


def test_spec_shape_errors():
    with pytest.raises(GadgetError):
        ConstraintSpec("nope", ((0,),))
    with pytest.raises(GadgetError):
        ConstraintSpec(EQ, ((0,),))
    with pytest.raises(GadgetError):
        ConstraintSpec(EQ, ((0,), (0,)))
    with pytest.raises(GadgetError):
        sum_bit(0, (1,), (2, 3))
    with pytest.raises(GadgetError):
        falsifying_rows(ConstraintSpec(EQ_CONST, (tuple(range(SCOPE_CAP + 1)),), 0))


def test_bits_and_values():
    assert [bits_needed(n) for n in (0, 1, 2, 3, 4, 7, 8)] == [1, 1, 2, 2, 3, 3, 4]
    assert value_of([True, False, True]) == 5


def test_cnf_builder_names_and_equal():
    b = CnfBuilder()
    x, y = b.var("x"), b.var("y")
    with pytest.raises(GadgetError):
        b.var("x")
    b.equal(x, y)
    cnf = b.build()
    assert cnf.names == ("x", "y")
    for row in itertools.product((False, True), repeat=2):
        assert cnf.is_satisfied_by(row) == (row[0] == row[1])


def _solutions(g, builder, free=()):
    var = [p for p, k in zip(builder.parts, builder.part_kind) if k == "var"]
    cl = [p for p, k in zip(builder.parts, builder.part_kind) if k != "var"]
    return list(census_maximal_sets(g, var, free, cl))


def test_variable_gadget():
    b = IsBuilder()
    frag = is_variable_gadget(b, "x")
    g = b.build()
    assert g.num_vertices == 2 and frag.census == {"var": 1, "clause": 0}
    assert len(_solutions(g, b)) == 2


@given(st.integers(1, 3), st.data())
def test_clause_gadget_needs_a_true_literal(n, data):
    b = IsBuilder()
    ports = [b.variable(f"x{i}") for i in range(n)]
    pol = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
    frag = is_clause_gadget(b, list(zip(ports, pol)))
    g = b.build()
    assert frag.census == {"var": 0, "clause": 1}
    seen = set()
    for S in _solutions(g, b):
        a = tuple(p.pos in S for p in ports)
        assert any(x == want for x, want in zip(a, pol))
        seen.add(a)
    expect = {a for a in itertools.product((False, True), repeat=n)
              if any(x == want for x, want in zip(a, pol))}
    assert seen == expect


@pytest.mark.parametrize("kind, lengths, const", CASES[:6])
def test_is_constraint_admits_exactly_the_satisfying_rows(kind, lengths, const):
    b = IsBuilder()
    groups = [[b.variable(f"g{i}.{j}") for j in range(n)] for i, n in enumerate(lengths)]
    b.constraint(kind, groups, const)
    g = b.build()
    flat = [p for grp in groups for p in grp]
    seen = {tuple(p.pos in S for p in flat) for S in _solutions(g, b)}
    expect = {r for r in itertools.product((False, True), repeat=len(flat))
              if _reference(kind, _groups(lengths), const, r)}
    assert seen == expect


@pytest.mark.parametrize("d", [0, 1, 2, 3])
def test_counting_gadget_census_maximal_sets(d):
    b = IsBuilder()
    U = [b.vertex(f"u{i}") for i in range(d)]
    frag = is_counting_gadget(b, U, 2)
    g = b.build()
    last = frag.ports["last"]
    pairs = set()
    for S in _solutions(g, b, U):
        assert g.is_independent(S)
        pairs.add((sum(u in S for u in U), value_of([p.pos in S for p in last])))
    # soundness: the last layer never undercounts; every overcount up to d is reachable
    assert pairs == {(c, v) for v in range(d + 1) for c in range(v + 1)}


def test_counting_gadget_rejects_small_M():
    b = IsBuilder()
    U = [b.vertex(f"u{i}") for i in range(4)]
    with pytest.raises(GadgetError):
        is_counting_gadget(b, U, 2)


def test_builder_rejects_bad_edges():
    b = IsBuilder()
    v = b.vertex("v")
    with pytest.raises(GadgetError):
        b.edge(v, v)
    with pytest.raises(GadgetError):
        b.edge(v, 5)
