"""Command-line front end.

Exit codes: 0 success, 1 the contract failed, 2 type error, 3 parse
error, 4 a counterexample was found, 5 out of fuel.  Results go to stdout
and diagnostics to stderr.  ``-`` as a file name reads standard input.
"""

from __future__ import annotations

import argparse
import sys

from . import core
from .albert import (
    AlbertSyntaxError, AlbertTypeError, format_albert_value, parse_albert,
    parse_albert_value, typecheck_albert, eval_albert,
)
from .albert_compile import AlbertCompileError, compile_and_check, compile_contract
from .campaigns import CAMPAIGNS, CampaignConfig
from .core import Env, Failed, OutOfFuel
from .interp import run_contract
from .optimize import cleanup, cleanup_fixpoint
from .syntax import (
    ContractSrc, LiteralTypeError, MichelsonSyntaxError, parse_code, parse_contract,
    parse_value, print_block, print_contract, print_value,
)
from .typecheck import MichelsonTypeError, typecheck_contract

OK, FAILED, TYPE_ERROR, PARSE_ERROR, COUNTEREXAMPLE, OUT_OF_FUEL = range(6)


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise _Exit(PARSE_ERROR, f"cannot read {path}: {e.strerror}") from None


def _write(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def parse_amount(text: str) -> int:
    """Mutez amount; ``5tez`` and ``1.5tez`` are accepted as well."""
    t = text.strip()
    try:
        if t.endswith("tez"):
            from decimal import Decimal
            mutez = Decimal(t[:-3]) * 1_000_000
            if mutez != int(mutez):
                raise ValueError
            n = int(mutez)
        else:
            n = int(t)
    except (ValueError, ArithmeticError):
        raise argparse.ArgumentTypeError(f"invalid amount {text!r}") from None
    if not 0 <= n <= core.MUTEZ_MAX:
        raise argparse.ArgumentTypeError(f"amount {text!r} out of range")
    return n


def _load_contract(path: str):
    try:
        src = parse_contract(_read(path))
    except MichelsonSyntaxError as e:
        raise _Exit(PARSE_ERROR, f"{path}: {e}") from None
    try:
        return src, typecheck_contract(src)
    except MichelsonTypeError as e:
        raise _Exit(TYPE_ERROR, f"{path}: {e}") from None


def _load_albert(path: str):
    try:
        c = parse_albert(_read(path))
    except AlbertSyntaxError as e:
        raise _Exit(PARSE_ERROR, f"{path}: {e}") from None
    try:
        return typecheck_albert(c)
    except AlbertTypeError as e:
        raise _Exit(TYPE_ERROR, f"{path}: {e}") from None


def _value(text: str, ty, what: str):
    try:
        return parse_value(text, ty)
    except MichelsonSyntaxError as e:
        raise _Exit(PARSE_ERROR, f"{what}: {e}") from None
    except LiteralTypeError as e:
        raise _Exit(TYPE_ERROR, f"{what}: {e}") from None


# ---------------------------------------------------------------------------
# Commands


def cmd_run(a) -> int:
    _, typed = _load_contract(a.file)
    param = _value(a.parameter, typed.parameter_ty, "parameter")
    storage = _value(a.storage, typed.storage_ty, "storage")
    res = run_contract(typed, param, storage, Env(a.amount), a.fuel)
    if isinstance(res, Failed):
        print(f"failed with {print_value(res.value)}", file=sys.stderr)
        return FAILED
    if isinstance(res, OutOfFuel):
        print(f"out of fuel (fuel {a.fuel})", file=sys.stderr)
        return OUT_OF_FUEL
    print(f"storage: {print_value(res.storage)}")
    print(f"operations: {print_value(core.List(res.operations))}")
    return OK


def cmd_typecheck(a) -> int:
    _, typed = _load_contract(a.file)
    out = typed.code.out
    print(f"parameter: {typed.parameter_ty}")
    print(f"storage: {typed.storage_ty}")
    print("output: " + ("always fails" if out is None else core.format_stack_ty(out)))
    return OK


def cmd_optimize(a) -> int:
    text = _read(a.file)
    opt = cleanup_fixpoint if a.fixpoint else cleanup
    if text.lstrip().startswith("{"):
        try:
            code = parse_code(text)
        except MichelsonSyntaxError as e:
            raise _Exit(PARSE_ERROR, f"{a.file}: {e}") from None
        _write(print_block(opt(code)) + "\n", a.output)
        return OK
    src, _ = _load_contract(a.file)
    new = ContractSrc(src.parameter_ty, src.storage_ty, opt(src.code))
    try:
        typecheck_contract(new)
    except MichelsonTypeError as e:  # would be an optimizer bug
        raise _Exit(TYPE_ERROR, f"optimized contract does not typecheck: {e}") from None
    _write(print_contract(new), a.output)
    return OK


def _print_report(name: str, report) -> int:
    print(f"{name}: {report.summary()}")
    for kind in sorted(report.outcomes):
        print(f"  {kind}: {report.outcomes[kind]}")
    for cex in report.counterexamples[:5]:
        print(f"counterexample: {cex}")
    return OK if report.ok else COUNTEREXAMPLE


def cmd_verify(a) -> int:
    print(f"seed: {a.seed}")
    if a.suite == "vote":
        from .corpus import vote_contract, voting_spec
        from .verify import check_contract_correct
        report = check_contract_correct(typecheck_contract(vote_contract()), voting_spec(),
                                        a.trials, a.seed)
        return _print_report("vote", report)
    suites = sorted(CAMPAIGNS) if a.suite == "all" else [a.suite]
    status = OK
    for name in suites:
        cfg = CampaignConfig(trials=a.trials, seed=a.seed)
        status = max(status, _print_report(name, CAMPAIGNS[name](cfg)))
    return status


def cmd_albert_compile(a) -> int:
    typed = _load_albert(a.file)
    try:
        src = compile_contract(typed, a.main)
    except AlbertCompileError as e:
        raise _Exit(TYPE_ERROR, str(e)) from None
    if a.optimize:
        src = ContractSrc(src.parameter_ty, src.storage_ty, cleanup_fixpoint(src.code))
    typecheck_contract(src)
    _write(print_contract(src), a.output)
    return OK


def cmd_albert_run(a) -> int:
    typed = _load_albert(a.file)
    try:
        tf = typed.fun(a.main)
    except KeyError as e:
        raise _Exit(TYPE_ERROR, str(e.args[0])) from None
    try:
        arg = parse_albert_value(a.arg, tf.consumed)
    except AlbertSyntaxError as e:
        raise _Exit(PARSE_ERROR, f"argument: {e}") from None
    res = eval_albert(typed, a.main, arg, a.amount)
    if isinstance(res, Failed):
        print(f"failed with {format_albert_value(res.value)}", file=sys.stderr)
        return FAILED
    print(format_albert_value(res))
    return OK


def cmd_diff(a) -> int:
    typed = _load_albert(a.file)
    print(f"seed: {a.seed}")
    sampler = None
    if a.sampler == "vote":
        from .corpus import vote_albert_sampler
        sampler = vote_albert_sampler
    try:
        report = compile_and_check(typed, a.main, a.trials, a.seed, sampler=sampler,
                                   optimize=a.optimize)
    except AlbertCompileError as e:
        raise _Exit(TYPE_ERROR, str(e)) from None
    return _print_report(f"diff {a.main}", report)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="michelkit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a Michelson contract")
    r.add_argument("file")
    r.add_argument("--storage", required=True, help="storage literal")
    r.add_argument("--parameter", required=True, help="parameter literal")
    r.add_argument("--amount", type=parse_amount, default=0, help="mutez, or e.g. 5tez")
    r.add_argument("--fuel", type=int, default=10_000)
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("typecheck", help="typecheck a Michelson contract")
    t.add_argument("file")
    t.set_defaults(func=cmd_typecheck)

    o = sub.add_parser("optimize", help="apply the peephole passes")
    o.add_argument("file")
    o.add_argument("-o", "--output")
    o.add_argument("--fixpoint", action="store_true", help="repeat until nothing changes")
    o.set_defaults(func=cmd_optimize)

    v = sub.add_parser("verify", help="run a randomized verification suite")
    v.add_argument("--suite", choices=sorted(CAMPAIGNS) + ["vote", "all"], default="all")
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    al = sub.add_parser("albert", help="Albert front end").add_subparsers(dest="albert_command",
                                                                         required=True)
    ac = al.add_parser("compile", help="compile an Albert function to a Michelson contract")
    ac.add_argument("file")
    ac.add_argument("--main", required=True)
    ac.add_argument("-o", "--output")
    ac.add_argument("--optimize", action="store_true")
    ac.set_defaults(func=cmd_albert_compile)
    ar = al.add_parser("run", help="evaluate an Albert function")
    ar.add_argument("file")
    ar.add_argument("--main", required=True)
    ar.add_argument("--arg", required=True, help="record literal, e.g. '{param = \"Coq\"; ...}'")
    ar.add_argument("--amount", type=parse_amount, default=0)
    ar.set_defaults(func=cmd_albert_run)

    d = sub.add_parser("diff", help="differential test: Albert evaluator vs compiled code")
    d.add_argument("file")
    d.add_argument("--main", required=True)
    d.add_argument("--trials", type=int, default=100)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--optimize", action="store_true", help="check the cleaned-up code")
    d.add_argument("--sampler", choices=["generic", "vote"], default="generic")
    d.set_defaults(func=cmd_diff)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Exit as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
