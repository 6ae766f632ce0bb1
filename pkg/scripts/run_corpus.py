"""Run every reduction over a seeded corpus and print a bounds table.

Per reduction: instance count, answer-map failures, certificate failures,
the largest realized width, and the smallest constant c that would still
cover every instance, i.e. max over instances of (realized - w) / log_term.

    python3 scripts/run_corpus.py --count 200 --seed 1 [--path] [--csv out.csv]
"""
from __future__ import annotations

import argparse
import csv
import random
import sys
import time
from dataclasses import dataclass, field

from widthred.cliquewidth import (
    check_correspondence, evaluate_kexpression, is_cw_to_sat_tw, random_expression,
    threesat_tw_to_is_cw,
)
from widthred.corpus import cnf_corpus, graph_corpus
from widthred.oracles import check_equivalence, decide
from widthred.reduce_tw import (
    is_to_max2sat, max2sat_to_sat, pw_certificate_for, sat_to_3sat, threesat_to_is,
)


@dataclass
class Row:
    name: str
    count: int = 0
    answer_fail: int = 0
    cert_fail: int = 0
    max_realized: int = 0
    needed_c: float = 0.0
    recorded_c: set = field(default_factory=set)
    seconds: float = 0.0

    def add_bound(self, b, path_cert=None) -> None:
        self.recorded_c.add(b.c)
        self.max_realized = max(self.max_realized, b.realized)
        if b.log_term:
            self.needed_c = max(self.needed_c, (b.realized - b.input_width) / b.log_term)
        if not b.ok:
            self.cert_fail += 1
        if path_cert is not None and not path_cert.is_path:
            self.cert_fail += 1

    def cells(self) -> list:
        return [self.name, self.count, self.answer_fail, self.cert_fail, self.max_realized,
                f"{self.needed_c:.2f}", ",".join(map(str, sorted(self.recorded_c))),
                f"{self.seconds:.1f}"]


HEADER = ["reduction", "n", "answer_fail", "cert_fail", "max_width", "needed_c", "c", "secs"]


def _one(row: Row, src, out, path: bool) -> None:
    rep = check_equivalence(src, out)
    row.count += 1
    if rep.source_answer != rep.target_answer:
        row.answer_fail += 1
    elif rep.problems:
        row.cert_fail += 1
    if path and out.extras.get("source_path"):
        pd, b = pw_certificate_for(out)
        row.add_bound(b, pd)
    else:
        row.add_bound(out.bound)


def run(count: int, seed: int, path: bool) -> list[Row]:
    rows = []

    row = Row("max2sat_to_sat")
    t = time.time()
    for it in cnf_corpus(count, seed, n_max=6, m_max=10, max_len=2, weights=2):
        for k in range(it.instance.total_weight + 1):
            _one(row, it.instance.with_target(k), max2sat_to_sat(it.instance, it.td, k), path)
    row.seconds = time.time() - t
    rows.append(row)

    row = Row("sat_to_3sat")
    t = time.time()
    for it in cnf_corpus(count, seed, n_max=8, m_max=8, max_len=6, make_nice=False):
        _one(row, it.instance, sat_to_3sat(it.instance, it.td), path)
    row.seconds = time.time() - t
    rows.append(row)

    row = Row("threesat_to_is")
    t = time.time()
    for it in cnf_corpus(count, seed, n_max=8, m_max=5, max_len=3):
        _one(row, it.instance, threesat_to_is(it.instance, it.td), path)
    row.seconds = time.time() - t
    rows.append(row)

    row = Row("is_to_max2sat")
    t = time.time()
    for it in graph_corpus(count, seed, n_max=8):
        _one(row, it.instance, is_to_max2sat(it.instance, it.td), path)
    row.seconds = time.time() - t
    rows.append(row)

    row = Row("is_cw_to_sat_tw")
    t = time.time()
    for i in range(count):
        rng = random.Random(seed * 100003 + i)
        expr = random_expression(rng, rng.randint(1, 8), rng.randint(1, 3))
        g = evaluate_kexpression(expr).graph
        k = rng.randint(0, g.num_vertices + 1)
        out = is_cw_to_sat_tw(expr, k)
        rep = check_equivalence(None, out)
        row.count += 1
        row.answer_fail += rep.source_answer != rep.target_answer
        row.add_bound(out.bound)
    row.seconds = time.time() - t
    rows.append(row)

    row = Row("threesat_tw_to_is_cw")
    t = time.time()
    for it in cnf_corpus(max(1, count // 4), seed, n_max=6, m_max=4, max_len=3):
        syn = threesat_tw_to_is_cw(it.instance, it.td)
        row.count += 1
        row.cert_fail += bool(check_correspondence(syn))
        if decide("sat", it.instance) != decide("is", syn.graph, syn.k, syn.parts):
            row.answer_fail += 1
        row.add_bound(syn.bound)
    row.seconds = time.time() - t
    rows.append(row)
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--path", action="store_true", help="measure path certificates where available")
    ap.add_argument("--csv", help="also write the table here")
    args = ap.parse_args(argv)
    rows = run(args.count, args.seed, args.path)
    widths = [max(len(str(x)) for x in col) for col in zip(HEADER, *(r.cells() for r in rows))]
    for line in [HEADER] + [r.cells() for r in rows]:
        print("  ".join(str(x).ljust(w) for x, w in zip(line, widths)))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            csv.writer(fh).writerows([HEADER] + [r.cells() for r in rows])
    bad = sum(r.answer_fail + r.cert_fail for r in rows)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
