"""``emtrace`` command-line front end.

Exit codes: 0 success, 1 mathematical failure or obstruction, 2 budget
exceeded, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from emtrace import cocycles, forms, groups, oracle, represent, serialize
from emtrace.errors import (
    BudgetExceeded,
    EmtraceError,
    InvalidCoefficientError,
    NotQuadraticError,
    NotRepresentableError,
    ParseError,
)
from emtrace.groups import FgAbGroup

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_BUDGET = 2
EXIT_INPUT = 3

DEFAULT_SEED = 20240601


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


class _Input(Exception):
    """Internal wrapper so OS and decode errors map to exit 3."""


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _Input(f"cannot read {path}: {exc}") from exc


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise _Input(f"cannot write {path}: {exc}") from exc


def _json_out(doc) -> str:
    return json.dumps(doc) + "\n"


def _group_arg(text: str) -> FgAbGroup:
    try:
        return FgAbGroup.parse(text)
    except EmtraceError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _element_arg(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",")] if text.strip() else []
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad element {text!r}") from exc


def _load_spec(path: str):
    return serialize.spec_from_json(serialize.loads_json(_read(path)))


def _load_table(path: str):
    return serialize.loads_table(_read(path))


def _budget(args) -> oracle.SearchBudget:
    return oracle.SearchBudget(args.budget, args.max_reports)


def _max_domain(args) -> int | None:
    return args.max_domain or None


def _fmt(v) -> str:
    return "[" + ",".join(str(a) for a in v) + "]"


# -- group ------------------------------------------------------------------


def cmd_group_canon(args) -> int:
    G = FgAbGroup.parse(args.group, args.free_rank)
    C = groups.canonicalize(G)
    # same modulus-list syntax as the input: 0 for each copy of Z, "1" for the trivial group
    moduli = [str(n) for n in C.torsion] + ["0"] * C.free_rank
    print(",".join(moduli) or "1")
    return EXIT_OK


# -- quad -------------------------------------------------------------------


def cmd_quad_list(args) -> int:
    for q in forms.iter_quads(args.group, args.coeffs):
        labelled = q.labelled()
        print(" ".join(f"{k}={_fmt(v)}" for k, v in labelled) if labelled else "(zero)")
    return EXIT_OK


def cmd_quad_eval(args) -> int:
    q = _load_spec(args.spec)
    bad = forms.validate_params(q)
    if bad:
        print("\n".join(bad), file=sys.stderr)
        return EXIT_FAIL
    if len(args.x) != q.domain.ngens:
        raise ParseError(f"element needs {q.domain.ngens} coordinates, got {len(args.x)}")
    print(_fmt(forms.eval_quad(q, args.x)))
    return EXIT_OK


def cmd_quad_validate(args) -> int:
    q = _load_spec(args.spec)
    bad = forms.validate_params(q, check_well_defined=True)
    for line in bad:
        print(line)
    if not bad:
        print("ok")
    return EXIT_FAIL if bad else EXIT_OK


# -- cocycle ----------------------------------------------------------------


def cmd_cocycle_build(args) -> int:
    q = _load_spec(args.spec)
    try:
        sc = cocycles.from_quad(q)
    except InvalidCoefficientError as exc:
        print("\n".join(exc.violations), file=sys.stderr)
        return EXIT_FAIL
    if not q.domain.is_finite:
        _write(args.output, _json_out(serialize.closed_form_to_json(sc)))
        return EXIT_OK
    tc = cocycles.tabulate(sc)
    text = serialize.dumps_table_csv(tc) if args.csv else serialize.dumps_table(tc)
    _write(args.output, text)
    return EXIT_OK


def _report(report, limit: int) -> None:
    print(report.summary())
    for v in report.violations[:limit]:
        print(f"  {v}")


def cmd_cocycle_verify(args) -> int:
    tc = _load_table(args.table)
    report = cocycles.verify(tc, args.max_reports, _max_domain(args), args.threads)
    _report(report, args.max_reports)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_cocycle_normal_form(args) -> int:
    tc = _load_table(args.table)
    report = cocycles.normal_form_check(tc, args.max_reports, _max_domain(args))
    _report(report, args.max_reports)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_cocycle_trace(args) -> int:
    tc = _load_table(args.table)
    table = cocycles.trace(tc)
    try:
        params = forms.fit_params(table)
    except NotQuadraticError as exc:
        _write(args.output, _json_out(serialize.quad_table_to_json(table, None)))
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    doc = serialize.spec_to_json(params) if args.spec else serialize.quad_table_to_json(table, params)
    _write(args.output, _json_out(doc))
    return EXIT_OK


# -- representable ----------------------------------------------------------


def cmd_representable(args) -> int:
    q = _load_spec(args.spec)
    try:
        theta = represent.theta(q)
    except InvalidCoefficientError as exc:
        print("\n".join(exc.violations), file=sys.stderr)
        return EXIT_INPUT
    for w, v in zip(theta.witnesses, theta.values):
        print(f"theta(e{w.factor_index + 1}, order {w.order}) = {_fmt(v)}")
    if not theta.is_zero:
        print("obstructed")
        return EXIT_FAIL
    print("representable")
    if args.witness:
        try:
            C = represent.bilinear_witness(q)
        except NotRepresentableError:  # pragma: no cover - theta already vanished
            return EXIT_FAIL
        print(_json_out({"bilinear": serialize.bilinear_to_json(C)}), end="")
    return EXIT_OK


# -- oracle -----------------------------------------------------------------


def cmd_oracle_classes(args) -> int:
    G, M = args.group, args.coeffs
    n_quads = forms.count_quads(G, M)
    n_classes = oracle.class_count(G, M, _budget(args), args.threads)
    print(f"{n_classes} {'=' if n_classes == n_quads else '!='} {n_quads}")
    return EXIT_OK if n_classes == n_quads else EXIT_FAIL


def cmd_oracle_separate(args) -> int:
    res = oracle.separate_all_quads(args.group, args.coeffs, _budget(args), args.threads)
    if res.ok:
        print(f"ok: {res.forms} forms, {res.pairs_checked} ordered pairs pairwise non-cohomologous")
        return EXIT_OK
    a, b = res.counterexample
    print("FAILED: cohomologous forms")
    print("  " + " ".join(f"{k}={_fmt(v)}" for k, v in a.labelled()))
    print("  " + " ".join(f"{k}={_fmt(v)}" for k, v in b.labelled()))
    return EXIT_FAIL


def cmd_oracle_represent_search(args) -> int:
    G, M = args.group, args.coeffs
    needed = oracle.bilinear_candidate_count(G, M)
    if needed > args.budget:
        raise BudgetExceeded(needed, args.budget, "bilinear candidates")
    bad = oracle.representability_agreement(G, M, _budget(args))
    total = forms.count_quads(G, M)
    if not bad:
        print(f"ok: criterion and exhaustive search agree on {total} forms")
        return EXIT_OK
    for q, crit, found in bad:
        print(
            " ".join(f"{k}={_fmt(v)}" for k, v in q.labelled())
            + f": criterion={crit} search={found}"
        )
    return EXIT_FAIL


def cmd_oracle_coboundaries(args) -> int:
    G, M = args.group, args.coeffs
    rng = np.random.default_rng(args.seed)
    failures = 0
    for _ in range(args.trials):
        k = cocycles.random_cochain(G, M, rng)
        tc = cocycles.coboundary(k)
        report = cocycles.verify(tc, args.max_reports, _max_domain(args), args.threads)
        if not report.ok or np.asarray(cocycles.trace(tc).values).any():
            failures += 1
    print(f"{args.trials - failures}/{args.trials} coboundaries verified with zero trace (seed {args.seed})")
    return EXIT_OK if failures == 0 else EXIT_FAIL


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--budget", type=int, default=10**7, help="search budget (candidates or DFS nodes)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for exhaustive checks")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for randomized commands")
    common.add_argument("--max-reports", type=int, default=16, help="violations to print")
    common.add_argument("--max-domain", type=int, default=cocycles.DEFAULT_MAX_DOMAIN,
                        help="largest |G| to verify exhaustively (0 = no limit)")
    common.add_argument("-v", "--verbose", action="store_true")

    pair = _Parser(add_help=False)
    pair.add_argument("--group", "-G", type=_group_arg, required=True,
                      help='torsion moduli, e.g. "2,4"; 0 stands for Z')
    pair.add_argument("--coeffs", "-M", type=_group_arg, required=True, help="coefficient group moduli")

    p = _Parser(prog="emtrace", description="Quadratic forms and 2-abelian 3-cocycles.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("group", help="group utilities").add_subparsers(dest="sub", required=True)
    s = g.add_parser("canon", parents=[common], help="invariant factor form")
    s.add_argument("group", help='comma separated moduli, e.g. "4,6"')
    s.add_argument("--free-rank", type=int, default=0)
    s.set_defaults(func=cmd_group_canon)

    qd = sub.add_parser("quad", help="quadratic forms").add_subparsers(dest="sub", required=True)
    s = qd.add_parser("list", parents=[common, pair], help="enumerate all forms")
    s.set_defaults(func=cmd_quad_list)
    s = qd.add_parser("eval", parents=[common], help="evaluate q at an element")
    s.add_argument("spec")
    s.add_argument("x", type=_element_arg, help='element coordinates, e.g. "1,0"')
    s.set_defaults(func=cmd_quad_eval)
    s = qd.add_parser("validate", parents=[common], help="check coefficient constraints")
    s.add_argument("spec")
    s.set_defaults(func=cmd_quad_validate)

    cc = sub.add_parser("cocycle", help="cocycle tables").add_subparsers(dest="sub", required=True)
    s = cc.add_parser("build", parents=[common], help="tabulate the cocycle of a form")
    s.add_argument("spec")
    s.add_argument("-o", "--output")
    s.add_argument("--csv", action="store_true", help="write the table as CSV")
    s.set_defaults(func=cmd_cocycle_build)
    for name, func, text in (
        ("verify", cmd_cocycle_verify, "check the pentagon and both hexagons"),
        ("normal-form", cmd_cocycle_normal_form, "check h is determined by c"),
    ):
        s = cc.add_parser(name, parents=[common], help=text)
        s.add_argument("table")
        s.set_defaults(func=func)
    s = cc.add_parser("trace", parents=[common], help="quadratic table of c(x, x) with fitted params")
    s.add_argument("table")
    s.add_argument("-o", "--output")
    s.add_argument("--spec", action="store_true", help="emit a spec document instead")
    s.set_defaults(func=cmd_cocycle_trace)

    s = sub.add_parser("representable", parents=[common], help="is q the trace of a bilinear form?")
    s.add_argument("spec")
    s.add_argument("--witness", action="store_true", help="print a bilinear form with trace q")
    s.set_defaults(func=cmd_representable)

    o = sub.add_parser("oracle", help="brute-force cross-checks").add_subparsers(dest="sub", required=True)
    for name, func, text in (
        ("classes", cmd_oracle_classes, "count cohomology classes by enumeration"),
        ("separate", cmd_oracle_separate, "distinct forms give distinct classes"),
        ("represent-search", cmd_oracle_represent_search, "criterion vs exhaustive bilinear search"),
    ):
        s = o.add_parser(name, parents=[common, pair], help=text)
        s.set_defaults(func=func)
    s = o.add_parser("coboundaries", parents=[common, pair], help="random coboundary soundness check")
    s.add_argument("--trials", type=int, default=1000)
    s.set_defaults(func=cmd_oracle_coboundaries)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (EmtraceError, _Input) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
