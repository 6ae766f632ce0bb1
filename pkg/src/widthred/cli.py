"""Command line entry point.

Exit codes: 0 pass, 1 I/O or usage, 2 semantic validation failure,
3 an oracle cap was exceeded.
"""
from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from . import __version__
from .cliquewidth import (
    ExpressionError, check_correspondence, evaluate_kexpression, format_cwe, is_cw_to_sat_tw,
    parse_cwe, random_expression, threesat_tw_to_is_cw,
)
from .corpus import gen_cnf, gen_graph
from .decomp import normalize_nice, path_from_layout
from .epnl import TmError, accepts_some_certificate, compile_tm_to_sat, parse_tm, simulate
from .formats import FormatError, format_dimacs, format_graph, format_td, parse_dimacs, parse_graph, parse_td, write_text
from .instances import (
    InstanceError, UGraph, as_graph, decomposition_width,
    validate_decomposition, validate_nice,
)
from .oracles import (
    CapExceeded, decide, is_bruteforce, is_treewidth_dp, max2sat_bruteforce, sat_bruteforce,
)
from .reduce_tw import (
    is_to_max2sat, max2sat_to_sat, pw_certificate_for, sat_to_3sat, threesat_to_is,
)
from .result import IS, MAX2SAT, SAT

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_CAP = 0, 1, 2, 3


class UsageError(Exception):
    pass


class ValidationFailed(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


# -- helpers ----------------------------------------------------------------

def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from None


def _report(args, pairs: list[tuple[str, object]]) -> None:
    for key, val in pairs:
        print(f"{key} {val}")
    if getattr(args, "report", None):
        write_text(args.report, "".join(f"{k} {v}\n" for k, v in pairs))


def _load_td(path: str | None, instance, nice: bool, path_shape: bool = False):
    if path is None:
        return None
    td = parse_td(_read(path))
    rep = validate_decomposition(as_graph(instance), td)
    if not rep.ok:
        raise ValidationFailed(f"{path}: {rep}")
    if nice and not (td.is_nice and validate_nice(instance, td).ok):
        td = normalize_nice(instance, td, "path" if (path_shape or td.is_path) else None)
    return td


def _write_instance(path, instance, parts=(), comments=()):
    if isinstance(instance, UGraph):
        write_text(path, format_graph(instance, parts or (), comments))
    else:
        write_text(path, format_dimacs(instance, comments))


# -- reduce -----------------------------------------------------------------

PAIRS = {
    ("max2sat", "sat"): "max2sat_to_sat",
    ("sat", "3sat"): "sat_to_3sat",
    ("3sat", "is"): "threesat_to_is",
    ("is", "max2sat"): "is_to_max2sat",
    ("is-cw", "sat"): "is_cw_to_sat_tw",
    ("3sat", "is-cw"): "threesat_tw_to_is_cw",
    ("3sat-to-cw", "is-cw"): "threesat_tw_to_is_cw",
}
NEEDS_TD = {"max2sat_to_sat", "threesat_to_is", "threesat_tw_to_is_cw"}


def cmd_reduce(args) -> int:
    name = PAIRS.get((args.source, args.target))
    if name is None:
        raise UsageError(f"no reduction from {args.source} to {args.target}")
    td_path = args.td or args.pd
    if name in NEEDS_TD and td_path is None:
        raise UsageError(f"{name} needs a decomposition (--td or --pd)")
    text = _read(args.input)
    comments = [f"reduction {name}", f"source {Path(args.input).name}"]
    if name == "is_cw_to_sat_tw":
        if args.k is None:
            raise UsageError("is-cw input needs --k")
        out = is_cw_to_sat_tw(parse_cwe(text), args.k)
    elif name == "is_to_max2sat":
        g, _ = parse_graph(text)
        out = is_to_max2sat(g, _load_td(td_path, g, False), args.k)
    else:
        src = parse_dimacs(text)
        if name == "max2sat_to_sat":
            out = max2sat_to_sat(src, _load_td(td_path, src, True, args.pd is not None), args.k)
        elif name == "sat_to_3sat":
            out = sat_to_3sat(src, _load_td(td_path, src, False))
        elif name == "threesat_to_is":
            out = threesat_to_is(src, _load_td(td_path, src, True, args.pd is not None))
        else:
            syn = threesat_tw_to_is_cw(src, _load_td(td_path, src, True, args.pd is not None))
            problems = check_correspondence(syn)
            if problems:
                raise ValidationFailed("; ".join(problems))
            write_text(args.output, format_cwe(syn.expression, comments + [f"is target {syn.k}"]))
            b = syn.bound
            _report(args, [("reduction", name), ("k", syn.k), ("labels", b.realized),
                           *(l.split(" ", 1) for l in b.lines("label_")), ("bound_ok", b.ok)])
            return EXIT_OK if b.ok else EXIT_INVALID
    cert, bound = out.certificate, out.bound
    if args.pd is not None or args.path_cert:
        cert, bound = pw_certificate_for(out)
    _write_instance(args.output, out.instance, out.parts, comments)
    n = out.instance.num_vertices if isinstance(out.instance, UGraph) else out.instance.num_vars
    if args.emit_td:
        write_text(args.emit_td, format_td(cert, n, [f"certificate for {Path(args.output).name}"]))
    rep = validate_decomposition(as_graph(out.instance), cert)
    pairs: list = [("reduction", name), ("answer_map", out.answer_map.replace(" ", "_")),
                   ("size", n), ("certificate_valid", rep.ok), ("path_shaped", cert.is_path)]
    pairs += [tuple(l.split(" ", 1)) for l in bound.lines()]
    pairs.append(("bound_ok", bound.ok))
    for kind, count in sorted((out.extras.get("census") or {}).items()):
        pairs.append((f"census_{kind}", count))
    _report(args, pairs)
    return EXIT_OK if rep.ok and bound.ok else EXIT_INVALID


# -- validate / solve -------------------------------------------------------

def _load_any(path: str):
    text = _read(path)
    first = next((l.split() for l in text.splitlines() if l.startswith("p ")), None)
    if first and first[1] == "cnf":
        return parse_dimacs(text), []
    return parse_graph(text)


def cmd_validate(args) -> int:
    inst, _ = _load_any(args.instance)
    td = parse_td(_read(args.td))
    rep = validate_decomposition(as_graph(inst), td)
    violations = list(rep.violations)
    if args.nice:
        violations += list(validate_nice(inst, td).violations)
    pairs = [("valid", not violations), ("width", rep.width), ("path_shaped", td.is_path),
             ("nice", td.is_nice)]
    pairs += [("violation", f"{v.code} {v.detail}") for v in violations]
    _report(args, pairs)
    return EXIT_OK if not violations else EXIT_INVALID


def cmd_solve(args) -> int:
    inst, parts = _load_any(args.input)
    if args.oracle == "sat":
        ans = sat_bruteforce(inst, cap=args.cap)
    elif args.oracle == "max2sat":
        ans = max2sat_bruteforce(inst, cap=args.cap)
    elif args.oracle == "is":
        ans = is_bruteforce(inst, cap=args.cap)
    else:
        if args.td is None:
            raise UsageError("the is-dp oracle needs --td")
        td = parse_td(_read(args.td))
        if not td.is_nice:
            td = normalize_nice(inst, td)
        ans = is_treewidth_dp(inst, td)
    pairs = [("oracle", args.oracle), ("value", ans.value)]
    target = getattr(inst, "target", None) if args.oracle == "max2sat" else getattr(inst, "is_target", None)
    if target is not None and args.oracle != "sat":
        pairs.append(("meets_target", ans.value >= target))
    if ans.witness is not None:
        if args.oracle in ("is", "is-dp"):
            shown = " ".join(str(v + 1) for v in sorted(ans.witness))
        else:
            shown = "".join("1" if b else "0" for b in ans.witness)
        pairs.append(("witness", shown or "-"))
    _report(args, pairs)
    return EXIT_OK


# -- clique-width, machines -------------------------------------------------

def cmd_eval_cwe(args) -> int:
    expr = parse_cwe(_read(args.expression))
    lg = evaluate_kexpression(expr)
    if args.output:
        write_text(args.output, format_graph(lg.graph, comments=[f"evaluated from {Path(args.expression).name}"]))
    _report(args, [("vertices", lg.graph.num_vertices), ("edges", len(lg.graph.edges)),
                   ("labels", expr.num_labels()), ("budget", expr.budget),
                   ("peak_live_labels", lg.max_live_labels)])
    return EXIT_OK


def _machine(args):
    tm = parse_tm(_read(args.machine))
    return tm.with_bounds(k=args.k, time=args.time, space=args.space)


def cmd_compile_tm(args) -> int:
    tm = _machine(args)
    out = compile_tm_to_sat(tm, args.input)
    write_text(args.output, format_dimacs(out.instance, [f"tableau of {Path(args.machine).name} on {args.input}"]))
    if args.emit_pd:
        write_text(args.emit_pd, format_td(out.certificate, out.instance.num_vars))
    rep = out.certificate_report()
    pairs = [("variables", out.instance.num_vars), ("clauses", out.instance.num_clauses),
             ("certificate_valid", rep.ok)]
    pairs += [tuple(l.split(" ", 1)) for l in out.bound.lines()]
    pairs.append(("bound_ok", out.bound.ok))
    _report(args, pairs)
    return EXIT_OK if rep.ok and out.bound.ok else EXIT_INVALID


def cmd_simulate(args) -> int:
    tm = _machine(args)
    pairs: list = [("outcome", simulate(tm, args.input, args.certificate or "").value)]
    if args.search:
        pairs.append(("some_certificate_accepts", accepts_some_certificate(tm, args.input)))
    _report(args, pairs)
    return EXIT_OK


# -- check ------------------------------------------------------------------

CHECKS = {
    "max2sat_to_sat": (MAX2SAT, SAT),
    "sat_to_3sat": (SAT, SAT),
    "threesat_to_is": (SAT, IS),
    "is_to_max2sat": (IS, MAX2SAT),
    "is_cw_to_sat_tw": ("cwe", SAT),
    "compile_tm_to_sat": ("tm", SAT),
}


def cmd_check(args) -> int:
    src_kind, dst_kind = CHECKS[args.reduction]
    text = _read(args.source)
    if src_kind == "cwe":
        if args.k is None:
            raise UsageError("is_cw_to_sat_tw sources need --k")
        g = evaluate_kexpression(parse_cwe(text)).graph
        source_answer = decide(IS, UGraph(g.num_vertices, g.edges, args.k))
    elif src_kind == "tm":
        if args.input is None:
            raise UsageError("compile_tm_to_sat sources need --input")
        source_answer = accepts_some_certificate(parse_tm(text), args.input)
    else:
        src, _ = _load_any(args.source)
        source_answer = decide(src_kind, src)
    reduced, parts = _load_any(args.reduced)
    target_answer = decide(dst_kind, reduced, parts=parts or None)
    problems = []
    if source_answer != target_answer:
        problems.append(f"answers differ: source {source_answer}, reduced {target_answer}")
    pairs: list = [("reduction", args.reduction), ("source_answer", source_answer),
                   ("target_answer", target_answer)]
    if args.cert:
        td = parse_td(_read(args.cert))
        rep = validate_decomposition(as_graph(reduced), td)
        pairs += [("certificate_valid", rep.ok), ("certificate_width", rep.width)]
        if not rep.ok:
            problems.append(f"certificate invalid: {rep}")
        if args.max_width is not None and rep.width > args.max_width:
            problems.append(f"certificate width {rep.width} exceeds {args.max_width}")
    pairs += [("problem", p) for p in problems]
    pairs.insert(0, ("result", "fail" if problems else "pass"))
    _report(args, pairs)
    return EXIT_INVALID if problems else EXIT_OK


# -- gen --------------------------------------------------------------------

def cmd_gen(args) -> int:
    rng = random.Random(args.seed)
    comment = [f"generated {args.what} seed {args.seed}"]
    if args.what == "random-cnf":
        inst = gen_cnf(rng, args.vars, args.clauses, args.max_len, args.weights)
        if args.target is not None:
            inst = inst.with_target(args.target)
        write_text(args.output, format_dimacs(inst, comment))
        n = inst.num_vars
    elif args.what == "random-graph":
        inst = gen_graph(rng, args.vertices, args.edges)
        inst = UGraph(inst.num_vertices, inst.edges, args.target)
        write_text(args.output, format_graph(inst, comments=comment))
        n = inst.num_vertices
    else:
        expr = random_expression(rng, args.vertices, args.labels)
        write_text(args.output, format_cwe(expr, comment))
        _report(args, [("generated", args.what), ("seed", args.seed)])
        return EXIT_OK
    pairs = [("generated", args.what), ("seed", args.seed), ("size", n)]
    if args.emit_td:
        td = path_from_layout(as_graph(inst), list(range(n)))
        if args.nice:
            td = normalize_nice(inst, td, "path")
        write_text(args.emit_td, format_td(td, n, ["identity-order path decomposition"]))
        pairs.append(("width", decomposition_width(td)))
    _report(args, pairs)
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="widthred", description="Width-preserving reductions with certificates.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--report", metavar="FILE", help="also write the key/value report here")
        return sp

    r = common(sub.add_parser("reduce", help="run one reduction"))
    r.add_argument("--from", dest="source", required=True,
                   choices=["max2sat", "sat", "3sat", "is", "is-cw", "3sat-to-cw"])
    r.add_argument("--to", dest="target", required=True, choices=["sat", "3sat", "is", "max2sat", "is-cw"])
    r.add_argument("input")
    grp = r.add_mutually_exclusive_group()
    grp.add_argument("--td", help="tree decomposition of the input")
    grp.add_argument("--pd", help="path decomposition of the input (path certificate emitted)")
    r.add_argument("-o", "--output", required=True)
    r.add_argument("--emit-td", metavar="FILE", help="write the width certificate")
    r.add_argument("--path-cert", action="store_true", help="emit the path-shaped certificate")
    r.add_argument("--k", type=int, help="target value where the input carries none")
    r.set_defaults(func=cmd_reduce)

    v = common(sub.add_parser("validate", help="check a decomposition against an instance"))
    v.add_argument("instance")
    v.add_argument("td")
    v.add_argument("--nice", action="store_true", help="also check the nice-node rules")
    v.set_defaults(func=cmd_validate)

    s = common(sub.add_parser("solve", help="run a brute-force oracle"))
    s.add_argument("--oracle", required=True, choices=["sat", "max2sat", "is", "is-dp"])
    s.add_argument("input")
    s.add_argument("--td")
    s.add_argument("--cap", type=int, help="override WIDTHRED_CAP")
    s.set_defaults(func=cmd_solve)

    e = common(sub.add_parser("eval-cwe", help="evaluate a k-expression"))
    e.add_argument("expression")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_eval_cwe)

    for name, func, help_ in (("compile-tm", cmd_compile_tm, "compile a machine run to SAT"),
                              ("simulate", cmd_simulate, "run a machine")):
        t = common(sub.add_parser(name, help=help_))
        t.add_argument("machine")
        t.add_argument("input", help="input bits, e.g. 1110")
        for flag in ("--k", "--time", "--space"):
            t.add_argument(flag, type=int)
        if name == "compile-tm":
            t.add_argument("-o", "--output", required=True)
            t.add_argument("--emit-pd", metavar="FILE")
        else:
            t.add_argument("certificate", nargs="?")
            t.add_argument("--search", action="store_true", help="try every certificate")
        t.set_defaults(func=func)

    c = common(sub.add_parser("check", help="compare oracle answers of a source and its reduction"))
    c.add_argument("source")
    c.add_argument("reduced")
    c.add_argument("--reduction", required=True, choices=sorted(CHECKS))
    c.add_argument("--cert", help="certificate of the reduced instance")
    c.add_argument("--max-width", type=int)
    c.add_argument("--k", type=int)
    c.add_argument("--input", help="machine input bits for compile_tm_to_sat")
    c.set_defaults(func=cmd_check)

    g = common(sub.add_parser("gen", help="seeded random instances"))
    g.add_argument("what", choices=["random-cnf", "random-graph", "random-cwe"])
    g.add_argument("--vars", type=int, default=6)
    g.add_argument("--clauses", type=int, default=8)
    g.add_argument("--max-len", type=int, default=3)
    g.add_argument("--weights", type=int, default=1, help="largest clause multiplicity")
    g.add_argument("--vertices", type=int, default=6)
    g.add_argument("--edges", type=int, default=8)
    g.add_argument("--labels", type=int, default=3)
    g.add_argument("--target", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--emit-td", metavar="FILE")
    g.add_argument("--nice", action="store_true")
    g.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"widthred: usage: {exc}", file=sys.stderr)
        return EXIT_IO
    except CapExceeded as exc:
        print(f"widthred: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (OSError, FormatError, ExpressionError, TmError) as exc:
        print(f"widthred: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationFailed, InstanceError) as exc:
        print(f"widthred: invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
