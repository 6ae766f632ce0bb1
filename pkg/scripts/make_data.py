"""Regenerate the bundled data files: demo machines, k-expressions, golden pairs.

    python3 scripts/make_data.py [--out src/widthred/data]

Output is deterministic, so the test suite can regenerate into a temp dir
and compare byte for byte.
"""
from __future__ import annotations

import argparse
import random
from pathlib import Path

from widthred.corpus import gen_cnf, gen_graph
from widthred.cliquewidth import complete_graph_expression, format_cwe, is_cw_to_sat_tw, p4_expression
from widthred.decomp import normalize_nice, path_from_layout
from widthred.epnl import compile_tm_to_sat, format_tm, hamilton_machine, permcheck_machine
from widthred.formats import format_dimacs, format_graph, format_td
from widthred.instances import UGraph, primal_graph
from widthred.reduce_tw import is_to_max2sat, max2sat_to_sat, sat_to_3sat, threesat_to_is

DEFAULT_OUT = Path(__file__).resolve().parent.parent / "src" / "widthred" / "data"


def _write(path: Path, text: str, written: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    written.append(str(path))


def _pair(out: Path, name: str, src_text: str, src_ext: str, red, extra: str, written) -> str:
    d = out / "golden" / name
    _write(d / f"source{src_ext}", src_text, written)
    n = red.instance.num_vertices if isinstance(red.instance, UGraph) else red.instance.num_vars
    if isinstance(red.instance, UGraph):
        _write(d / "reduced.gr", format_graph(red.instance, red.parts or ()), written)
        reduced = "reduced.gr"
    else:
        _write(d / "reduced.cnf", format_dimacs(red.instance), written)
        reduced = "reduced.cnf"
    _write(d / "cert.td", format_td(red.certificate, n), written)
    return f"{name} {red.name} source{src_ext} {reduced} cert.td {red.bound.claimed} {extra}".rstrip()


def build(out: Path) -> list[str]:
    written: list[str] = []
    _write(out / "permcheck.tm", format_tm(permcheck_machine(3), ["permutation checker, k = 3",
                                                                 "input 1^m 0 asks for m distinct indices"]),
           written)
    _write(out / "hamilton3.tm", format_tm(hamilton_machine(3), ["directed Hamiltonicity, 3 vertices",
                                                                 "input: adjacency matrix, row-major"]),
           written)
    _write(out / "p4.cwe", format_cwe(p4_expression(), ["chordless path a-b-c-d"]), written)
    for n in range(1, 9):
        _write(out / "complete" / f"k{n}.cwe", format_cwe(complete_graph_expression(n), [f"K_{n}"]), written)

    rng = random.Random(2024)
    manifest = []
    m2 = gen_cnf(rng, 4, 5, 2, weights=2)
    m2 = m2.with_target(m2.total_weight - 1)
    td = normalize_nice(m2, path_from_layout(primal_graph(m2), range(m2.num_vars)), "path")
    red = max2sat_to_sat(m2, td)
    manifest.append(_pair(out, "max2sat_sat", format_dimacs(m2), ".cnf", red, "", written))

    sat = gen_cnf(rng, 6, 4, 6)
    red = sat_to_3sat(sat, path_from_layout(primal_graph(sat), range(sat.num_vars)))
    manifest.append(_pair(out, "sat_3sat", format_dimacs(sat), ".cnf", red, "", written))

    s3 = gen_cnf(rng, 2, 2, 2)
    red = threesat_to_is(s3, normalize_nice(s3, path_from_layout(primal_graph(s3), range(2)), "path"))
    manifest.append(_pair(out, "3sat_is", format_dimacs(s3), ".cnf", red, "", written))

    g = gen_graph(rng, 6, 7)
    g = UGraph(g.num_vertices, g.edges, 3)
    red = is_to_max2sat(g, path_from_layout(g, range(6)))
    manifest.append(_pair(out, "is_max2sat", format_graph(g), ".gr", red, "", written))

    red = is_cw_to_sat_tw(p4_expression(), 2)
    manifest.append(_pair(out, "p4_sat", format_cwe(p4_expression()), ".cwe", red, "k=2", written))

    tm = permcheck_machine(2)
    red = compile_tm_to_sat(tm, "110")
    manifest.append(_pair(out, "permcheck_sat", format_tm(tm), ".tm", red, "input=110", written))

    head = ["# name reduction source reduced certificate claimed_width [k=..] [input=..]"]
    _write(out / "golden" / "MANIFEST", "\n".join(head + manifest) + "\n", written)
    return written


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = ap.parse_args(argv)
    for path in build(args.out):
        print(path)


if __name__ == "__main__":
    main()
