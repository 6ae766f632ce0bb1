import itertools

import pytest
from hypothesis import given, strategies as st
from pysat.solvers import Solver

from widthred.epnl import (
    C_TABLEAU, Action, Key, Outcome, TmError, TmSpec, _run, accepting_certificates,
    accepts_some_certificate, adjacency_input, bits, compile_tm_to_sat, decode_run,
    enumerate_certificates, format_tm, hamilton_machine, immediate_accept, parse_tm,
    permcheck_machine, simulate,
)
from widthred.instances import as_graph, validate_decomposition
from widthred.oracles import decide

from conftest import DATA


def _models(cnf, limit=200):
    with Solver(bootstrap_with=[list(c.lits) for c in cnf.clauses]) as s:
        while s.solve():
            m = s.get_model()
            yield [v > 0 for v in m] + [False] * (cnf.num_vars - len(m))
            s.add_clause([-v for v in m])
            limit -= 1
            if limit == 0:
                raise AssertionError("too many models")


def _perm_cert(idx, k):
    w = max(1, (k - 1).bit_length())
    return [(i >> j) & 1 for i in idx for j in range(w)]


def test_tm_round_trip_and_data_files():
    for tm in (permcheck_machine(2), permcheck_machine(3), hamilton_machine(3), immediate_accept()):
        assert parse_tm(format_tm(tm, ["x"])) == tm
    assert parse_tm((DATA / "permcheck.tm").read_text()) == permcheck_machine(3)
    assert parse_tm((DATA / "hamilton3.tm").read_text()) == hamilton_machine(3)


@pytest.mark.parametrize("text", [
    "states: a\nstart: a\naccept: a\nk: 1\n",
    "states: a\nstart: b\naccept: a\nk: 1\ntime: 2\n",
    "states: a\nstart: a\naccept: a\nk: 0\ntime: 2\n",
    "states: a\nstart: a\naccept: a\nk: 1\ntime: 2\ntrans:\na 0 0 0 0 a 0 0 0 0 0\n",
    "states: a\nstart: a\naccept: a\nk: 1\ntime: 2\ntrans:\na 0 0 0 0 a 0 0 0 0 0 -1\n",
    "states: a\nstart: a\naccept: a\nk: 1\ntime: 2\ntrans:\na 0 0 0 2 a 0 0 0 0 0 0\n",
    "states: a\nstart: a\naccept: a\nk: 1\ntime: 2\ntrans:\na 0 0 0 0 a 0 0 x 0 0 0\n",
    "states: a\nstart: a\naccept: a\nk: 1\ntime: 2\ntrans:\n"
    "a 0 0 0 0 a 0 0 0 0 0 0\na 0 0 0 0 a 0 0 0 0 0 0\n",
    "a 0 0 0 0 a 0 0 0 0 0 0\n",
])
def test_tm_parse_errors(text):
    with pytest.raises(TmError):
        parse_tm(text)


def test_empty_input_and_bad_bits():
    with pytest.raises(TmError):
        simulate(immediate_accept(), "")
    with pytest.raises(TmError):
        compile_tm_to_sat(immediate_accept(), "")
    with pytest.raises(TmError):
        bits("012")


@pytest.mark.parametrize("k", [1, 2, 3])
def test_permcheck_simulation(k):
    tm = permcheck_machine(k)
    for m in range(k + 2):
        x = "1" * m + "0"
        for idx in itertools.product(range(k), repeat=m):
            want = Outcome.ACCEPT if len(set(idx)) == m else Outcome.REJECT
            assert simulate(tm, x, _perm_cert(idx, k)) == want
        assert accepts_some_certificate(tm, x) == (m <= k)


def test_permcheck_rejects_out_of_range_index():
    tm = permcheck_machine(3)
    assert simulate(tm, "10", [1, 1]) == Outcome.REJECT


ARCS3 = {
    "cycle": [(0, 1), (1, 2), (2, 0)],
    "reverse": [(1, 0), (2, 1), (0, 2)],
    "path": [(0, 1), (1, 2)],
    "two": [(0, 1), (1, 0), (1, 2), (2, 1)],
    "full": [(u, v) for u in range(3) for v in range(3) if u != v],
}


def _hamiltonian(n, arcs):
    arcs = set(arcs)
    return any(all((p[i], p[(i + 1) % n]) in arcs for i in range(n))
               for p in itertools.permutations(range(n)))


@pytest.mark.parametrize("name", sorted(ARCS3))
def test_hamilton_simulation(name):
    tm = hamilton_machine(3)
    x = adjacency_input(3, ARCS3[name])
    assert accepts_some_certificate(tm, x) == _hamiltonian(3, ARCS3[name])


def test_exact_search_matches_brute_force():
    tm = permcheck_machine(2)
    for x in ("0", "10", "110", "1110"):
        brute = enumerate_certificates(tm, x, 6)
        exact = list(accepting_certificates(tm, x))
        for cert, out in brute.items():
            hit = any(cert[:len(p)] == p for p in exact)
            assert hit == (out is Outcome.ACCEPT)


def test_resource_violation_and_stutter():
    # the only rule walks the k-bit head off the tape
    tm = TmSpec(("a", "b"), "a", "b", {Key("a", 0, 0, 0, 0): Action("a", 0, 0, 0, 1, 0, 0)}, 1, 3)
    assert simulate(tm, "0") == Outcome.VIOLATION
    # no rule at all: the start configuration repeats until time runs out
    r = _run(immediate_accept(time=4), (0,), (), strict=False)
    assert r.outcome == Outcome.ACCEPT and r.steps == 0


CASES = [(permcheck_machine(1), "10"), (permcheck_machine(2), "110"), (permcheck_machine(2), "1110"),
         (permcheck_machine(2), "0"), (permcheck_machine(3), "1110")]


@pytest.mark.parametrize("tm, x", CASES)
def test_compile_matches_certificate_search(tm, x):
    out = compile_tm_to_sat(tm, x)
    assert decide("sat", out.instance) == accepts_some_certificate(tm, x)
    rep = validate_decomposition(as_graph(out.instance), out.certificate)
    assert rep.ok and out.certificate.is_path
    assert out.bound.c == C_TABLEAU and out.bound.ok
    assert out.bound.input_width == tm.k


def _replay(tm, x, steps):
    """Certificate bits the decoded tableau consumed; TC only changes after a read."""
    x = bits(x)
    cert = [steps[0]["C"]]
    for a, b in zip(steps, steps[1:]):
        act = tm.step(Key(a["q"], x[a["hI"]], a["K"][a["hK"]], a["L"][a["hL"]], a["C"]))
        if act.dC:
            cert.append(b["C"])
        else:
            assert b["C"] == a["C"], "certificate cell changed without an advance"
    return cert


@pytest.mark.parametrize("tm, x", [(permcheck_machine(2), "110"), (permcheck_machine(3), "110"),
                                   (permcheck_machine(2), "10")])
def test_models_are_exactly_the_accepting_runs(tm, x):
    out = compile_tm_to_sat(tm, x)
    seen = set()
    for model in _models(out.instance):
        steps = decode_run(out, model)
        cert = _replay(tm, x, steps)
        run = _run(tm, bits(x), cert, strict=False, keep_trace=True)
        assert run.outcome is Outcome.ACCEPT
        for i, st_ in enumerate(steps):
            q, hI, hK, hL, _, K, L = run.trace[min(i, len(run.trace) - 1)]
            assert (st_["q"], st_["hI"], st_["hK"], st_["hL"], st_["K"], st_["L"]) == (q, hI, hK, hL, K, L)
        seen.add(tuple(cert[:run.cert_read]))
    exact = set(accepting_certificates(tm, x))
    assert seen >= exact
    assert all(any(c[:len(p)] == p for p in exact) for c in seen)


def _pairs():
    out = []
    for k in (1, 2, 3):
        for x in ("0", "1" * k + "0", "1" * (k + 1) + "0"):
            out.append((f"perm{k}:{x}", permcheck_machine(k), x))
    for name in ("cycle", "path"):
        out.append((f"ham3:{name}", hamilton_machine(3), adjacency_input(3, ARCS3[name])))
    return out


@pytest.mark.parametrize("label, tm, x", _pairs(), ids=[p[0] for p in _pairs()])
def test_sat_decision_equals_simulation(label, tm, x):
    out = compile_tm_to_sat(tm, x)
    assert decide("sat", out.instance) == accepts_some_certificate(tm, x)
    assert out.bound.ok


@given(st.integers(1, 3), st.lists(st.integers(0, 2), max_size=4))
def test_permcheck_any_certificate(k, idx):
    idx = [i % k for i in idx]
    x = "1" * len(idx) + "0"
    want = Outcome.ACCEPT if len(set(idx)) == len(idx) else Outcome.REJECT
    assert simulate(permcheck_machine(k), x, _perm_cert(idx, k)) == want
