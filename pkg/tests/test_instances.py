import itertools

import pytest
from hypothesis import given, strategies as st

from widthred.instances import (
    BAD_NODE, CLAUSE_COUNT, EDGE_UNCOVERED, FORGET_COUNT, NOT_A_PATH, NOT_A_TREE, NOT_CONNECTED,
    ROOT_NOT_EMPTY, UNKNOWN_ELEMENT, VERTEX_UNCOVERED, Clause, CnfInstance, DecompNode,
    InstanceError, Kind, Literal, TreeDecomposition, UGraph, decomposition_width, primal_graph,
    single_bag, validate_decomposition, validate_nice,
)
from widthred.decomp import normalize_nice

from conftest import cnfs, graphs


@given(st.integers(0, 50), st.booleans())
def test_literal_int_round_trip(v, negated):
    lit = Literal(v, negated)
    assert Literal.from_int(lit.to_int()) == lit
    assert (lit.to_int() < 0) == negated


@pytest.mark.parametrize("clauses, n, msg", [
    ([()], 2, "empty"),
    ([(1, 1)], 2, "repeats"),
    ([(3,)], 2, "out of range"),
    ([Clause((1,), 0)], 2, "multiplicity"),
])
def test_cnf_rejects_bad_clauses(clauses, n, msg):
    with pytest.raises(InstanceError, match=msg):
        CnfInstance(n, tuple(clauses))


def test_cnf_target_and_length_limits():
    with pytest.raises(InstanceError, match="exceeds"):
        CnfInstance(2, (Clause((1,), 2),), target=3)
    with pytest.raises(InstanceError, match="longer"):
        CnfInstance(3, ((1, 2, 3),), max_clause_len=2)
    assert CnfInstance(2, (Clause((1,), 2), (2,))).total_weight == 3


@given(cnfs(weights=3))
def test_count_satisfied_matches_clause_checks(cnf):
    for a in itertools.product((False, True), repeat=cnf.num_vars):
        expect = sum(c.mult for c in cnf.clauses
                     if any(a[abs(l) - 1] == (l > 0) for l in c.lits))
        assert cnf.count_satisfied(a) == expect
        assert cnf.is_satisfied_by(a) == (expect == cnf.total_weight)


def test_graph_rejects_self_loops_and_range():
    with pytest.raises(InstanceError):
        UGraph(3, frozenset({(1, 1)}))
    with pytest.raises(InstanceError):
        UGraph(3, frozenset({(0, 3)}))
    g = UGraph(3, frozenset({(2, 0)}))
    assert g.edges == {(0, 2)}
    assert g.is_independent([0, 1]) and not g.is_independent([0, 2])


@given(cnfs())
def test_primal_graph_edges_are_cooccurrences(cnf):
    g = primal_graph(cnf)
    expect = set()
    for c in cnf.clauses:
        vs = sorted({abs(l) - 1 for l in c.lits})
        expect.update(itertools.combinations(vs, 2))
    assert g.edges == expect
    assert g.num_vertices == cnf.num_vars


@given(graphs())
def test_single_bag_is_valid_with_width_n_minus_1(g):
    rep = validate_decomposition(g, single_bag(g))
    assert rep.ok
    assert rep.width == max(0, g.num_vertices - 1)


PATH3 = UGraph(3, frozenset({(0, 1), (1, 2)}))


def _td(bags, children, root=0, is_path=False):
    return TreeDecomposition(tuple(DecompNode(frozenset(b), Kind.PLAIN, None, tuple(c))
                                   for b, c in zip(bags, children)), root, is_path)


def test_validation_accepts_two_bag_path():
    rep = validate_decomposition(PATH3, _td([{0, 1}, {1, 2}], [[1], []]))
    assert rep.ok and rep.width == 1


@pytest.mark.parametrize("bags, children, code", [
    ([{0, 1}, {1, 2}], [[1], [0]], NOT_A_TREE),
    ([{0, 1}, {1, 2}, {1}], [[], [], []], NOT_A_TREE),
    ([{0, 1}, {1, 2, 7}], [[1], []], UNKNOWN_ELEMENT),
    ([{0, 1}], [[]], VERTEX_UNCOVERED),
    ([{0, 1}, {2}], [[1], []], EDGE_UNCOVERED),
    ([{0, 1}, {2}, {1, 2}], [[1], [2], []], NOT_CONNECTED),
])
def test_validation_reports_each_violation(bags, children, code):
    rep = validate_decomposition(PATH3, _td(bags, children))
    assert not rep.ok
    assert code in rep.codes()
    assert rep.width is None


def test_validation_collects_several_violations():
    rep = validate_decomposition(PATH3, _td([{0}, {2, 9}], [[1], []]))
    assert {UNKNOWN_ELEMENT, VERTEX_UNCOVERED, EDGE_UNCOVERED} <= rep.codes()


def test_path_flag_requires_a_path():
    td = _td([{1}, {0, 1}, {1, 2}], [[1, 2], [], []], is_path=True)
    assert NOT_A_PATH in validate_decomposition(PATH3, td).codes()


def test_width_of_empty_bag_decomposition_is_zero():
    assert decomposition_width(_td([set()], [[]])) == 0
    with pytest.raises(InstanceError):
        decomposition_width(TreeDecomposition(()))


def test_nice_validation_catches_broken_nodes():
    cnf = CnfInstance(2, ((1, -2),))
    ntd = normalize_nice(cnf, single_bag(cnf))
    assert validate_nice(cnf, ntd).ok
    nodes = list(ntd.nodes)
    # drop the clause introduction by turning it into a plain copy
    i = next(i for i, n in enumerate(nodes) if n.kind == Kind.INTRO_CLAUSE)
    nodes[i] = DecompNode(nodes[i].bag, Kind.PLAIN, None, nodes[i].children)
    rep = validate_nice(cnf, TreeDecomposition(tuple(nodes), ntd.root, ntd.is_path))
    assert {BAD_NODE, CLAUSE_COUNT} <= rep.codes()


def test_nice_validation_wants_empty_root_and_single_forgets():
    cnf = CnfInstance(1, ((1,),))
    leaf = DecompNode(frozenset(), Kind.LEAF)
    intro = DecompNode(frozenset({0}), Kind.INTRO, 0, (0,))
    clause = DecompNode(frozenset({0}), Kind.INTRO_CLAUSE, 0, (1,))
    td = TreeDecomposition((leaf, intro, clause), 2, True)
    rep = validate_nice(cnf, td)
    assert {ROOT_NOT_EMPTY, FORGET_COUNT} <= rep.codes()
