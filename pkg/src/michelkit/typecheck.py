"""Type checking of untyped Michelson code against a stack type.

The result is a tree of :class:`TypedInstr` nodes, each annotated with its
input and output stack types.  An output of ``None`` stands for the type of
a stack that is never produced because every path ends in ``FAILWITH``; it
unifies with any other stack type.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import core
from .core import (
    BOOL_T, INT_T, MUTEZ_T, NAT_T, OPERATION_T, UNIT_T,
    TBool, TInt, TList, TMap, TOption, TOr, TPair, Ty,
    format_stack_ty, is_comparable,
)
from .syntax import (
    ContractSrc, Dig, Dip, Drop, Dug, If, IfLeft, IfNone, Instr, LiteralTypeError, Loop,
    Macro, Prim, Push, Seq, TyArg, literal_to_value, print_instr,
)

FAILED = None  # output stack type of a sequence that always fails


class MichelsonTypeError(Exception):
    def __init__(self, message: str, instr: Instr | None = None, path: tuple = ()):
        self.instr, self.path = instr, path
        where = ""
        if instr is not None and instr.loc is not None:
            where = f"{instr.loc[0]}:{instr.loc[1]}: "
        elif path:
            where = "instruction " + ".".join(map(str, path)) + ": "
        what = f" ({print_instr(instr)})" if instr is not None and not _has_body(instr) else ""
        super().__init__(f"{where}{message}{what}")


def _has_body(instr) -> bool:
    return isinstance(instr, (Dip, If, IfNone, IfLeft, Loop, Seq))


@dataclass(frozen=True)
class TypedInstr:
    instr: Instr
    inp: tuple
    out: tuple | None
    bodies: tuple = ()         # TypedSeq children, in syntactic order
    value: core.Value | None = None  # PUSH payload
    case: str | None = None    # resolved overload, e.g. "nat,int"


@dataclass(frozen=True)
class TypedSeq:
    instrs: tuple
    inp: tuple
    out: tuple | None

    def untyped(self) -> tuple:
        return tuple(t.instr for t in self.instrs)


@dataclass(frozen=True)
class TypedContract:
    parameter_ty: Ty
    storage_ty: Ty
    code: TypedSeq


def _key(t: Ty) -> str:
    return str(t)


ADD_TABLE = {
    ("nat", "nat"): NAT_T, ("int", "int"): INT_T, ("nat", "int"): INT_T,
    ("int", "nat"): INT_T, ("mutez", "mutez"): MUTEZ_T,
}
SUB_TABLE = {
    ("nat", "nat"): INT_T, ("int", "int"): INT_T, ("nat", "int"): INT_T,
    ("int", "nat"): INT_T, ("mutez", "mutez"): MUTEZ_T,
}
_INT_TO_BOOL = frozenset({"EQ", "NEQ", "GT", "GE", "LT", "LE"})


def unify(a: tuple | None, b: tuple | None) -> tuple | None:
    """Join two branch output types; ``None`` (failure) joins with anything."""
    if a is FAILED:
        return b
    if b is FAILED or a == b:
        return a
    raise ValueError


class _Checker:
    def seq(self, code, inp: tuple, path: tuple) -> TypedSeq:
        cur = inp
        out = []
        for k, ins in enumerate(code):
            if cur is FAILED:
                raise MichelsonTypeError("unreachable instruction after FAILWITH", ins, path + (k,))
            t = self.instr(ins, cur, path + (k,))
            out.append(t)
            cur = t.out
        return TypedSeq(tuple(out), inp, cur)

    def instr(self, ins: Instr, st: tuple, path: tuple) -> TypedInstr:
        def err(msg):
            raise MichelsonTypeError(f"{msg}; stack is {format_stack_ty(st)}", ins, path)

        def need(n):
            if len(st) < n:
                err(f"stack underflow: needs {n} element(s)")

        def done(out, bodies=(), value=None, case=None):
            return TypedInstr(ins, st, out, tuple(bodies), value, case)

        match ins:
            case Prim(name):
                return self.prim(name, st, err, need, done)
            case Push(ty, lit):
                try:
                    v = literal_to_value(lit, ty)
                except LiteralTypeError as e:
                    err(str(e))
                return done((ty,) + st, value=v)
            case Drop(n):
                need(n)
                return done(st[n:])
            case Dig(n):
                need(n + 1)
                return done((st[n],) + st[:n] + st[n + 1:])
            case Dug(n):
                need(n + 1)
                return done(st[1:n + 1] + (st[0],) + st[n + 1:])
            case Dip(n, body):
                need(n)
                b = self.seq(body, st[n:], path + (0,))
                return done(FAILED if b.out is FAILED else st[:n] + b.out, [b])
            case Seq(body):
                b = self.seq(body, st, path + (0,))
                return done(b.out, [b])
            case If(then, else_):
                need(1)
                if not isinstance(st[0], TBool):
                    err("IF expects a bool on top")
                a = self.seq(then, st[1:], path + (0,))
                b = self.seq(else_, st[1:], path + (1,))
                return done(self.join(a, b, err), [a, b])
            case IfNone(none, some):
                need(1)
                if not isinstance(st[0], TOption):
                    err("IF_NONE expects an option on top")
                a = self.seq(none, st[1:], path + (0,))
                b = self.seq(some, (st[0].elem,) + st[1:], path + (1,))
                return done(self.join(a, b, err), [a, b])
            case IfLeft(left, right):
                need(1)
                if not isinstance(st[0], TOr):
                    err("IF_LEFT expects an or on top")
                a = self.seq(left, (st[0].left,) + st[1:], path + (0,))
                b = self.seq(right, (st[0].right,) + st[1:], path + (1,))
                return done(self.join(a, b, err), [a, b])
            case Loop(body):
                need(1)
                if not isinstance(st[0], TBool):
                    err("LOOP expects a bool on top")
                b = self.seq(body, st[1:], path + (0,))
                if b.out is not FAILED and b.out != st:
                    err(f"LOOP body must produce {format_stack_ty(st)}, got {format_stack_ty(b.out)}")
                return done(st[1:], [b])
            case TyArg(name, tys):
                match name:
                    case "NONE":
                        return done((TOption(tys[0]),) + st)
                    case "NIL":
                        return done((TList(tys[0]),) + st)
                    case "EMPTY_MAP":
                        if not is_comparable(tys[0]):
                            err(f"type {tys[0]} is not comparable")
                        return done((TMap(tys[0], tys[1]),) + st)
                    case "LEFT":
                        need(1)
                        return done((TOr(st[0], tys[0]),) + st[1:])
                    case "RIGHT":
                        need(1)
                        return done((TOr(tys[0], st[0]),) + st[1:])
            case Macro(name):
                err(f"unexpanded macro {name}")
        err("unknown instruction")

    @staticmethod
    def join(a: TypedSeq, b: TypedSeq, err):
        try:
            return unify(a.out, b.out)
        except ValueError:
            err(f"branches disagree: {format_stack_ty(a.out)} vs {format_stack_ty(b.out)}")

    @staticmethod
    def prim(name: str, st: tuple, err, need, done) -> TypedInstr:
        match name:
            case "DUP":
                need(1)
                return done((st[0],) + st)
            case "SWAP":
                need(2)
                return done((st[1], st[0]) + st[2:])
            case "FAILWITH":
                need(1)
                return done(FAILED)
            case "UNIT":
                return done((UNIT_T,) + st)
            case "AMOUNT":
                return done((MUTEZ_T,) + st)
            case "PAIR":
                need(2)
                return done((TPair(st[0], st[1]),) + st[2:])
            case "CAR" | "CDR":
                need(1)
                if not isinstance(st[0], TPair):
                    err(f"{name} expects a pair on top")
                return done((st[0].left if name == "CAR" else st[0].right,) + st[1:])
            case "SOME":
                need(1)
                return done((TOption(st[0]),) + st[1:])
            case "CONS":
                need(2)
                if st[1] != TList(st[0]):
                    err("CONS expects an element and a list of that element type")
                return done(st[1:])
            case "GET" | "MEM":
                need(2)
                m = st[1]
                if not isinstance(m, TMap) or m.key != st[0]:
                    err(f"{name} expects a key and a map with that key type")
                res = TOption(m.value) if name == "GET" else BOOL_T
                return done((res,) + st[2:])
            case "UPDATE":
                need(3)
                m = st[2]
                if not isinstance(m, TMap) or m.key != st[0] or st[1] != TOption(m.value):
                    err("UPDATE expects key : option value : map key value")
                return done(st[2:])
            case "ADD" | "SUB":
                need(2)
                table = ADD_TABLE if name == "ADD" else SUB_TABLE
                case = (_key(st[0]), _key(st[1]))
                if case not in table:
                    err(f"no {name} overload for {st[0]} and {st[1]}")
                return done((table[case],) + st[2:], case=",".join(case))
            case "COMPARE":
                need(2)
                if st[0] != st[1] or not is_comparable(st[0]):
                    err("COMPARE expects two values of the same comparable type")
                return done((INT_T,) + st[2:], case=_key(st[0]))
            case "NOT":
                need(1)
                if not isinstance(st[0], TBool):
                    err("NOT expects a bool")
                return done(st)
        if name in _INT_TO_BOOL:
            need(1)
            if not isinstance(st[0], TInt):
                err(f"{name} expects an int")
            return done((BOOL_T,) + st[1:])
        err("unknown instruction")


def typecheck_seq(code, inp) -> TypedSeq:
    """Type ``code`` against input stack type ``inp``; raises on ill-typed code."""
    return _Checker().seq(tuple(code), tuple(inp), ())


def contract_stack_types(parameter_ty: Ty, storage_ty: Ty) -> tuple[tuple, tuple]:
    return ((TPair(parameter_ty, storage_ty),),
            (TPair(TList(OPERATION_T), storage_ty),))


def typecheck_contract(c: ContractSrc) -> TypedContract:
    inp, expected = contract_stack_types(c.parameter_ty, c.storage_ty)
    code = typecheck_seq(c.code, inp)
    if code.out is not FAILED and code.out != expected:
        raise MichelsonTypeError(
            f"contract must end with stack {format_stack_ty(expected)}, "
            f"got {format_stack_ty(code.out)}")
    return TypedContract(c.parameter_ty, c.storage_ty, code)
