"""Seeded random instances and decompositions for tests and experiments."""
from __future__ import annotations

import random
from dataclasses import dataclass

from .decomp import SINGLE, EliminationSchedule, EliminationStep, normalize_nice, path_from_layout, td_from_schedule
from .instances import Clause, CnfInstance, TreeDecomposition, UGraph, as_graph


def gen_cnf(rng: random.Random, n: int, m: int, max_len: int = 3, weights: int = 1) -> CnfInstance:
    clauses = []
    for _ in range(m):
        size = rng.randint(1, min(max_len, n))
        vs = rng.sample(range(n), size)
        clauses.append(Clause(tuple((v + 1) * rng.choice((1, -1)) for v in vs), rng.randint(1, weights)))
    return CnfInstance(n, tuple(clauses))


def gen_graph(rng: random.Random, n: int, m: int, target: int | None = None) -> UGraph:
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return UGraph(n, frozenset(rng.sample(pairs, min(m, len(pairs)))), target)


def elimination_td(instance, rng: random.Random | None = None) -> TreeDecomposition:
    """Tree decomposition from a (random) elimination order of the primal graph."""
    g = as_graph(instance)
    order = sorted(g.vertices)
    if rng is not None:
        rng.shuffle(order)
    sched = EliminationSchedule()
    for v in order:
        sched.add(EliminationStep((v,), SINGLE, None))
    return td_from_schedule(g, sched)


def layout_pd(instance, rng: random.Random | None = None) -> TreeDecomposition:
    """Path decomposition from a (random) vertex order."""
    g = as_graph(instance)
    order = sorted(g.vertices)
    if rng is not None:
        rng.shuffle(order)
    return path_from_layout(g, order)


def nice(instance, td: TreeDecomposition) -> TreeDecomposition:
    return normalize_nice(instance, td, "path" if td.is_path else None)


@dataclass
class CorpusItem:
    seed: int
    instance: object
    td: TreeDecomposition


def cnf_corpus(count: int, seed: int = 0, n_max: int = 8, m_max: int = 8, max_len: int = 3,
               weights: int = 1, path_every: int = 2, make_nice: bool = True) -> list[CorpusItem]:
    """Random formulas, every `path_every`-th one with a path decomposition."""
    out = []
    for i in range(count):
        rng = random.Random(seed * 100003 + i)
        n = rng.randint(1, n_max)
        cnf = gen_cnf(rng, n, rng.randint(0, m_max), max_len, weights)
        td = layout_pd(cnf, rng) if i % path_every == 0 else elimination_td(cnf, rng)
        out.append(CorpusItem(i, cnf, nice(cnf, td) if make_nice else td))
    return out


def graph_corpus(count: int, seed: int = 0, n_max: int = 8, path_every: int = 2) -> list[CorpusItem]:
    out = []
    for i in range(count):
        rng = random.Random(seed * 100003 + i)
        n = rng.randint(1, n_max)
        g = gen_graph(rng, n, rng.randint(0, n * (n - 1) // 2))
        g = UGraph(g.num_vertices, g.edges, rng.randint(0, n))
        td = layout_pd(g, rng) if i % path_every == 0 else elimination_td(g, rng)
        out.append(CorpusItem(i, g, td))
    return out
