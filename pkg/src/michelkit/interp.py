"""Fuel-bounded evaluator for typed Michelson code.

Fuel contract: evaluating any instruction node costs one unit, except
``{ ... }`` sequence nodes which are free.  ``LOOP`` is charged once per
test of its condition, so each iteration re-charges both the loop node and
its body.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import core
from .core import (
    Bool, Env, ExecResult, Failed, Int, Left, List, Map, Mutez, Nat, NoneV,
    OutOfFuel, Pair, Right, Some, Success, UNIT, Value,
)
from .syntax import Dig, Dip, Drop, Dug, If, IfLeft, IfNone, Loop, Prim, Push, Seq, TyArg
from .typecheck import TypedContract, TypedInstr, TypedSeq


class MichelsonFailure(Exception):
    """Raised by primitives that abort execution (``FAILWITH``, mutez overflow)."""

    def __init__(self, value: Value):
        super().__init__(value)
        self.value = value


class _NoFuel(Exception):
    pass


# ---------------------------------------------------------------------------
# Primitive semantics shared with the WP calculus.


def add_values(a: Value, b: Value) -> Value:
    match a, b:
        case Nat(x), Nat(y):
            return Nat(x + y)
        case Mutez(x), Mutez(y):
            if x + y > core.MUTEZ_MAX:
                raise MichelsonFailure(UNIT)
            return Mutez(x + y)
    return Int(a.value + b.value)


def sub_values(a: Value, b: Value) -> Value:
    if isinstance(a, Mutez):
        if a.value < b.value:
            raise MichelsonFailure(UNIT)
        return Mutez(a.value - b.value)
    return Int(a.value - b.value)


COMPARISONS = {
    "EQ": lambda z: z == 0, "NEQ": lambda z: z != 0, "GT": lambda z: z > 0,
    "GE": lambda z: z >= 0, "LT": lambda z: z < 0, "LE": lambda z: z <= 0,
}


def apply_prim(name: str, s: tuple, env: Env) -> tuple:
    """Apply an argument-less, non-control primitive to stack ``s``."""
    match name:
        case "DUP":
            return (s[0],) + s
        case "SWAP":
            return (s[1], s[0]) + s[2:]
        case "FAILWITH":
            raise MichelsonFailure(s[0])
        case "UNIT":
            return (UNIT,) + s
        case "AMOUNT":
            return (Mutez(env.amount),) + s
        case "PAIR":
            return (Pair(s[0], s[1]),) + s[2:]
        case "CAR":
            return (s[0].left,) + s[1:]
        case "CDR":
            return (s[0].right,) + s[1:]
        case "SOME":
            return (Some(s[0]),) + s[1:]
        case "CONS":
            return (List((s[0],) + s[1].items),) + s[2:]
        case "GET":
            v = s[1].get(s[0])
            return (core.NONE if v is None else Some(v),) + s[2:]
        case "MEM":
            return (Bool(s[0] in s[1]),) + s[2:]
        case "UPDATE":
            opt = s[1]
            return (s[2].update(s[0], opt.value if isinstance(opt, Some) else None),) + s[3:]
        case "ADD":
            return (add_values(s[0], s[1]),) + s[2:]
        case "SUB":
            return (sub_values(s[0], s[1]),) + s[2:]
        case "COMPARE":
            return (Int(core.compare_value(s[0], s[1])),) + s[2:]
        case "NOT":
            return (Bool(not s[0].value),) + s[1:]
    if name in COMPARISONS:
        return (Bool(COMPARISONS[name](s[0].value)),) + s[1:]
    raise ValueError(f"unknown primitive {name}")


def apply_tyarg(name: str, s: tuple) -> tuple:
    match name:
        case "NONE":
            return (core.NONE,) + s
        case "NIL":
            return (List(),) + s
        case "EMPTY_MAP":
            return (Map(),) + s
        case "LEFT":
            return (Left(s[0]),) + s[1:]
        case "RIGHT":
            return (Right(s[0]),) + s[1:]
    raise ValueError(f"unknown instruction {name}")


# ---------------------------------------------------------------------------
# Evaluator


class _Machine:
    def __init__(self, fuel: int, env: Env):
        self.fuel = fuel
        self.env = env

    def charge(self):
        if self.fuel <= 0:
            raise _NoFuel
        self.fuel -= 1

    def seq(self, code: TypedSeq, s: tuple) -> tuple:
        for t in code.instrs:
            s = self.instr(t, s)
        return s

    def instr(self, t: TypedInstr, s: tuple) -> tuple:
        ins = t.instr
        if isinstance(ins, Seq):
            return self.seq(t.bodies[0], s)
        self.charge()
        match ins:
            case Prim(name):
                return apply_prim(name, s, self.env)
            case TyArg(name):
                return apply_tyarg(name, s)
            case Push():
                return (t.value,) + s
            case Drop(n):
                return s[n:]
            case Dig(n):
                return (s[n],) + s[:n] + s[n + 1:]
            case Dug(n):
                return s[1:n + 1] + (s[0],) + s[n + 1:]
            case Dip(n):
                return s[:n] + self.seq(t.bodies[0], s[n:])
            case If():
                return self.seq(t.bodies[0 if s[0].value else 1], s[1:])
            case IfNone():
                if isinstance(s[0], NoneV):
                    return self.seq(t.bodies[0], s[1:])
                return self.seq(t.bodies[1], (s[0].value,) + s[1:])
            case IfLeft():
                branch = 0 if isinstance(s[0], Left) else 1
                return self.seq(t.bodies[branch], (s[0].value,) + s[1:])
            case Loop():
                while s[0].value:
                    s = self.seq(t.bodies[0], s[1:])
                    self.charge()
                return s[1:]
        raise ValueError(f"cannot evaluate {ins!r}")


def eval_seq(code: TypedSeq, fuel: int, stack, env: Env = Env()) -> ExecResult:
    """Run ``code`` on ``stack`` with at most ``fuel`` instruction steps."""
    m = _Machine(fuel, env)
    try:
        return Success(m.seq(code, tuple(stack)))
    except MichelsonFailure as f:
        return Failed(f.value)
    except _NoFuel:
        return OutOfFuel()


@dataclass(frozen=True)
class ContractOutput:
    operations: tuple
    storage: Value


def run_contract(c: TypedContract, param: Value, storage: Value, env: Env = Env(),
                 fuel: int = 10_000) -> ContractOutput | Failed | OutOfFuel:
    """Run a contract under the calling convention.

    Returns the emitted operations and the new storage, or the ``Failed`` /
    ``OutOfFuel`` result of the underlying evaluation.
    """
    if not core.value_has_type(param, c.parameter_ty):
        raise TypeError(f"parameter does not have type {c.parameter_ty}")
    if not core.value_has_type(storage, c.storage_ty):
        raise TypeError(f"storage does not have type {c.storage_ty}")
    res = eval_seq(c.code, fuel, (Pair(param, storage),), env)
    if not isinstance(res, Success):
        return res
    (out,) = res.stack
    return ContractOutput(out.left.items, out.right)
