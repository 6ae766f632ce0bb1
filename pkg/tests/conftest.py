import random
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from widthred.corpus import elimination_td, gen_cnf, gen_graph, layout_pd
from widthred.instances import Clause, CnfInstance, UGraph

settings.register_profile(
    "widthred", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("widthred")

DATA = Path(__file__).resolve().parent.parent / "src" / "widthred" / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@st.composite
def cnfs(draw, n_max=6, m_max=6, max_len=3, weights=1, min_vars=1):
    n = draw(st.integers(min_vars, n_max))
    m = draw(st.integers(0, m_max))
    clauses = []
    for _ in range(m):
        size = draw(st.integers(1, min(max_len, n)))
        vs = draw(st.lists(st.integers(0, n - 1), min_size=size, max_size=size, unique=True))
        signs = draw(st.lists(st.booleans(), min_size=size, max_size=size))
        mult = draw(st.integers(1, weights))
        clauses.append(Clause(tuple((v + 1) if s else -(v + 1) for v, s in zip(vs, signs)), mult))
    return CnfInstance(n, tuple(clauses))


@st.composite
def graphs(draw, n_max=7, min_vertices=1):
    n = draw(st.integers(min_vertices, n_max))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return UGraph(n, frozenset(chosen))


@st.composite
def with_decomposition(draw, instances, path=None):
    """(instance, decomposition) with a seeded elimination or layout decomposition."""
    inst = draw(instances)
    rng = random.Random(draw(st.integers(0, 2**16)))
    use_path = draw(st.booleans()) if path is None else path
    td = layout_pd(inst, rng) if use_path else elimination_td(inst, rng)
    return inst, td


def small_cnf(seed, n=5, m=6, max_len=3, weights=1):
    return gen_cnf(random.Random(seed), n, m, max_len, weights)


def small_graph(seed, n=6, m=8):
    return gen_graph(random.Random(seed), n, m)


# one verdict line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
