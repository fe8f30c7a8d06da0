"""Weakest preconditions, contract-correctness harness and random generators.

Predicates are ordinary Python callables over stacks.  :func:`wp` builds
the weakest precondition of a typed sequence by structural recursion, in
continuation-passing style: internally every predicate also receives the
fuel that is left, so that the precondition consumes fuel exactly as the
evaluator does and running out of fuel makes it false.
"""

from __future__ import annotations

import random
import sys
import zlib
from dataclasses import dataclass, field
from typing import Callable, Iterable

from . import core, interp
from .core import (
    BOOL_T, INT_T, MUTEZ_MAX, MUTEZ_T, NAT_T, STRING_T, UNIT_T,
    Bool, Env, Int, Left, List, Map, Mutez, Nat, NoneV, Pair,
    Right, Some, Str, Success, TBool, TInt, TList, TMap, TMutez, TNat, TOption,
    TOr, TPair, TString, TUnit, Ty, format_stack_ty,
)
from .interp import MichelsonFailure, add_values, sub_values
from .syntax import (
    ADD, AMOUNT, CAR, CDR, COMPARE, CONS, DUP, FAILWITH, GET, MEM, NOT, PAIR,
    SOME, SUB, SWAP, UNIT, UPDATE, Dig, Dip, Drop, Dug, If, IfLeft, IfNone, Loop,
    Prim, Push, Seq, TyArg, bodies, print_block, value_to_literal,
)
from .typecheck import ADD_TABLE, SUB_TABLE, TypedContract, TypedInstr, TypedSeq

# Deeply nested continuations for long runs; generated programs stay far below.
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20_000))


@dataclass(frozen=True)
class Predicate:
    fn: Callable[[tuple], bool]
    description: str = "<predicate>"

    def __call__(self, stack) -> bool:
        return bool(self.fn(tuple(stack)))

    def __str__(self) -> str:
        return self.description


TRUE_POST = Predicate(lambda s: True, "true")

# ---------------------------------------------------------------------------
# Weakest precondition

# A continuation: (stack, remaining fuel) -> bool
Cont = Callable[[tuple, int], bool]


def _then(step, k: Cont) -> Cont:
    """One fuel-consuming step: ``step(stack)`` returns the next stack."""

    def pre(s, f):
        if f < 1:
            return False
        try:
            s2 = step(s)
        except MichelsonFailure:
            return False
        return k(s2, f - 1)

    return pre


def _prim_step(name: str, env: Env):
    match name:
        case "DUP":
            return lambda s: (s[0],) + s
        case "SWAP":
            return lambda s: (s[1], s[0]) + s[2:]
        case "UNIT":
            return lambda s: (core.UNIT,) + s
        case "AMOUNT":
            amount = Mutez(env.amount)
            return lambda s: (amount,) + s
        case "PAIR":
            return lambda s: (Pair(s[0], s[1]),) + s[2:]
        case "CAR":
            return lambda s: (s[0].left,) + s[1:]
        case "CDR":
            return lambda s: (s[0].right,) + s[1:]
        case "SOME":
            return lambda s: (Some(s[0]),) + s[1:]
        case "CONS":
            return lambda s: (List((s[0],) + s[1].items),) + s[2:]
        case "GET":
            def get(s):
                v = s[1].get(s[0])
                return (core.NONE if v is None else Some(v),) + s[2:]
            return get
        case "MEM":
            return lambda s: (Bool(s[1].get(s[0]) is not None),) + s[2:]
        case "UPDATE":
            def update(s):
                new = s[1].value if isinstance(s[1], Some) else None
                return (s[2].update(s[0], new),) + s[3:]
            return update
        case "ADD":
            return lambda s: (add_values(s[0], s[1]),) + s[2:]
        case "SUB":
            return lambda s: (sub_values(s[0], s[1]),) + s[2:]
        case "COMPARE":
            return lambda s: (Int(core.compare_value(s[0], s[1])),) + s[2:]
        case "NOT":
            return lambda s: (Bool(not s[0].value),) + s[1:]
        case "EQ":
            return lambda s: (Bool(s[0].value == 0),) + s[1:]
        case "NEQ":
            return lambda s: (Bool(s[0].value != 0),) + s[1:]
        case "GT":
            return lambda s: (Bool(s[0].value > 0),) + s[1:]
        case "GE":
            return lambda s: (Bool(s[0].value >= 0),) + s[1:]
        case "LT":
            return lambda s: (Bool(s[0].value < 0),) + s[1:]
        case "LE":
            return lambda s: (Bool(s[0].value <= 0),) + s[1:]
    raise ValueError(f"no WP rule for {name}")


def _wp_seq(code: TypedSeq, k: Cont, env: Env) -> Cont:
    for t in reversed(code.instrs):
        k = _wp_instr(t, k, env)
    return k


def _wp_instr(t: TypedInstr, k: Cont, env: Env) -> Cont:
    ins = t.instr
    match ins:
        case Seq():
            return _wp_seq(t.bodies[0], k, env)
        case Prim("FAILWITH"):
            return lambda s, f: False
        case Prim(name):
            return _then(_prim_step(name, env), k)
        case Push():
            v = t.value
            return _then(lambda s: (v,) + s, k)
        case TyArg("NONE"):
            return _then(lambda s: (core.NONE,) + s, k)
        case TyArg("NIL"):
            return _then(lambda s: (List(),) + s, k)
        case TyArg("EMPTY_MAP"):
            return _then(lambda s: (Map(),) + s, k)
        case TyArg("LEFT"):
            return _then(lambda s: (Left(s[0]),) + s[1:], k)
        case TyArg("RIGHT"):
            return _then(lambda s: (Right(s[0]),) + s[1:], k)
        case Drop(n):
            return _then(lambda s: s[n:], k)
        case Dig(n):
            return _then(lambda s: (s[n],) + s[:n] + s[n + 1:], k)
        case Dug(n):
            return _then(lambda s: s[1:n + 1] + (s[0],) + s[n + 1:], k)
        case Dip(n):
            body = t.bodies[0]

            def dip(s, f):
                if f < 1:
                    return False
                top = s[:n]
                return _wp_seq(body, lambda r, g: k(top + r, g), env)(s[n:], f - 1)

            return dip
        case If():
            then, else_ = (_wp_seq(b, k, env) for b in t.bodies)
            return lambda s, f: f >= 1 and (then if s[0].value else else_)(s[1:], f - 1)
        case IfNone():
            none, some = (_wp_seq(b, k, env) for b in t.bodies)

            def if_none(s, f):
                if f < 1:
                    return False
                if isinstance(s[0], NoneV):
                    return none(s[1:], f - 1)
                return some((s[0].value,) + s[1:], f - 1)

            return if_none
        case IfLeft():
            left, right = (_wp_seq(b, k, env) for b in t.bodies)

            def if_left(s, f):
                if f < 1:
                    return False
                branch = left if isinstance(s[0], Left) else right
                return branch((s[0].value,) + s[1:], f - 1)

            return if_left
        case Loop():
            def loop(s, f):
                if f < 1:
                    return False
                if s[0].value:
                    return body(s[1:], f - 1)
                return k(s[1:], f - 1)

            body = _wp_seq(t.bodies[0], loop, env)
            return loop
    raise ValueError(f"no WP rule for {ins!r}")


def wp(code: TypedSeq, fuel: int, post: Predicate, env: Env = Env()) -> Predicate:
    """Weakest precondition of ``code`` for ``post`` under a fuel budget."""
    pre = _wp_seq(code, lambda s, f: post(s), env)
    return Predicate(lambda s: pre(tuple(s), fuel), f"wp({post.description})")


def check_wp_correct(code: TypedSeq, fuel: int, post: Predicate, stack,
                     env: Env = Env()) -> bool:
    """Both sides of the WP characterisation agree on ``stack``.

    The left side is the computed precondition; the right side runs the
    evaluator and checks ``post`` on a successful result.
    """
    lhs = wp(code, fuel, post, env)(stack)
    res = interp.eval_seq(code, fuel, stack, env)
    rhs = isinstance(res, Success) and post(res.stack)
    return lhs == rhs


# ---------------------------------------------------------------------------
# Contract specifications


@dataclass(frozen=True)
class ContractSpec:
    """A functional specification of a contract.

    ``relation(input, env, output)`` must hold exactly for the successful
    runs.  ``candidates(input, env)`` enumerates a finite set of output
    stacks among which any expected output lies; the harness uses it to
    check that whatever the specification allows is actually produced.
    """

    relation: Callable[[tuple, Env, tuple], bool]
    min_fuel: Callable[[tuple], int]
    candidates: Callable[[tuple, Env], Iterable[tuple]]
    sampler: Callable[[random.Random], tuple] | None = None  # rng -> (input, env)
    name: str = "spec"


@dataclass
class Counterexample:
    input: tuple
    env: Env
    reason: str

    def __str__(self) -> str:
        from .syntax import print_value
        stack = " : ".join(print_value(v) for v in self.input)
        return f"input [{stack}] amount={self.env.amount}: {self.reason}"


@dataclass
class Report:
    trials: int = 0
    counterexamples: list = field(default_factory=list)
    outcomes: dict = field(default_factory=dict)  # outcome label -> count

    def tally(self, kind: str):
        self.outcomes[kind] = self.outcomes.get(kind, 0) + 1

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    def summary(self) -> str:
        return f"{self.trials} trials, {len(self.counterexamples)} counterexample(s)"


def check_contract_correct(c: TypedContract, spec: ContractSpec, samples: int,
                           seed: int, stop_after: int | None = None) -> Report:
    rng = random.Random(seed)
    report = Report()
    inp_ty = c.code.inp
    for _ in range(samples):
        if spec.sampler is not None:
            stack, env = spec.sampler(rng)
        else:
            stack = gen_stack(rng, inp_ty)
            env = Env(_gen_mutez(rng))
        if not core.stack_has_type(stack, inp_ty):
            raise TypeError(f"sampled input {stack!r} does not have type {format_stack_ty(inp_ty)}")
        report.trials += 1
        fuel = spec.min_fuel(stack)
        res = interp.eval_seq(c.code, fuel, stack, env)
        report.tally(type(res).__name__)
        bad = None
        if isinstance(res, Success):
            if not spec.relation(stack, env, res.stack):
                bad = "evaluation succeeded but the result violates the specification"
        for out in spec.candidates(stack, env):
            if bad:
                break
            if spec.relation(stack, env, out):
                if not isinstance(res, Success):
                    bad = f"specification allows an output but evaluation gave {res}"
                elif res.stack != out:
                    bad = "specification allows an output the evaluation did not produce"
        if bad:
            report.counterexamples.append(Counterexample(stack, env, bad))
            if stop_after and len(report.counterexamples) >= stop_after:
                break
    return report


# ---------------------------------------------------------------------------
# Random values and stacks

_STRINGS = ("", "a", "b", "Agda", "Coq", "Isabelle", "OCaml", "tez")
_BIG = 2**70


def _gen_int(rng: random.Random, nonneg: bool = False) -> int:
    r = rng.random()
    if r < 0.3:
        n = rng.choice((0, 1, 2))
    elif r < 0.75:
        n = rng.randint(0, 100)
    elif r < 0.9:
        n = rng.randint(0, 10**6)
    else:
        n = rng.randint(2**62, _BIG)
    if not nonneg and rng.random() < 0.4:
        n = -n
    return n


def _gen_mutez(rng: random.Random) -> int:
    r = rng.random()
    if r < 0.15:
        return MUTEZ_MAX - rng.choice((0, 0, 1, 5000000))
    if r < 0.3:
        return rng.choice((0, 1))
    if r < 0.6:
        return 5_000_000 + rng.randint(-2, 2)
    return rng.randint(0, 10**7)


def gen_value(rng: random.Random, ty: Ty, size: int = 3) -> core.Value:
    match ty:
        case TUnit():
            return core.UNIT
        case TBool():
            return Bool(rng.random() < 0.5)
        case TNat():
            return Nat(_gen_int(rng, nonneg=True))
        case TInt():
            return Int(_gen_int(rng))
        case TMutez():
            return Mutez(_gen_mutez(rng))
        case TString():
            return Str(rng.choice(_STRINGS))
        case TPair(l, r):
            return Pair(gen_value(rng, l, size), gen_value(rng, r, size))
        case TOr(l, r):
            return Left(gen_value(rng, l, size)) if rng.random() < 0.5 else Right(gen_value(rng, r, size))
        case TOption(e):
            return core.NONE if rng.random() < 0.3 else Some(gen_value(rng, e, size))
        case TList(e):
            return List(tuple(gen_value(rng, e, size - 1) for _ in range(rng.randint(0, max(size, 0)))))
        case TMap(k, v):
            entries = {}
            for _ in range(rng.randint(0, max(size, 0))):
                key = gen_value(rng, k)
                if all(core.compare_value(key, other) for other in entries):
                    entries[key] = gen_value(rng, v, size - 1)
            return Map(tuple(entries.items()))
    raise TypeError(f"cannot generate a value of type {ty}")


def _rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def gen_stack(seed, stack_ty) -> tuple:
    """A random stack of type ``stack_ty``; ``seed`` may also be a ``Random``."""
    rng = _rng(seed)
    return tuple(gen_value(rng, t) for t in stack_ty)


_BASE = (UNIT_T, BOOL_T, NAT_T, INT_T, MUTEZ_T, STRING_T)
_KEYS = (NAT_T, INT_T, MUTEZ_T, STRING_T, BOOL_T)


def gen_ty(rng: random.Random, depth: int = 2) -> Ty:
    if depth <= 0 or rng.random() < 0.6:
        return rng.choice(_BASE)
    sub = depth - 1
    match rng.randrange(5):
        case 0:
            return TPair(gen_ty(rng, sub), gen_ty(rng, sub))
        case 1:
            return TOr(gen_ty(rng, sub), gen_ty(rng, sub))
        case 2:
            return TOption(gen_ty(rng, sub))
        case 3:
            return TList(gen_ty(rng, sub))
    return TMap(rng.choice(_KEYS), gen_ty(rng, sub))


def gen_stack_ty(seed, max_width: int = 8) -> tuple:
    rng = _rng(seed)
    return tuple(gen_ty(rng) for _ in range(rng.randint(0, max_width)))


# ---------------------------------------------------------------------------
# Type-directed program generator

MAX_DEPTH = 6
MAX_WIDTH = 8
MAX_LOOP_ITERATIONS = 8
_NUMERIC = (TNat, TInt, TMutez)


class _Gen:
    """Type-directed program generator.

    ``hidden`` counts the stack slots made invisible by enclosing ``DIP``
    blocks, so that the total stack width never exceeds ``MAX_WIDTH``; an
    instruction's nesting depth never exceeds the ``depth`` it is given.
    """

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.hidden = 0

    def fits(self, st: tuple, extra: int) -> bool:
        return len(st) + self.hidden + extra <= MAX_WIDTH

    def push(self, ty: Ty) -> Push:
        return Push(ty, value_to_literal(gen_value(self.rng, ty, 2)))

    def seq(self, st: tuple, depth: int, floor: int, loops: int = 0,
            steps: tuple = (0, 5)) -> tuple[list, tuple | None]:
        """Random code over ``st`` that never touches the bottom ``floor`` slots."""
        if depth <= 0:
            return [], st
        rng = self.rng
        code = []
        for _ in range(rng.randint(*steps)):
            if rng.random() < 0.03 and len(st) > floor:
                code.append(FAILWITH)
                return code, None
            instrs, st = self.step(st, depth, floor, loops)
            code += instrs
            if st is None:
                break
        return code, st

    def step(self, st: tuple, depth: int, floor: int, loops: int):
        rng = self.rng
        avail = len(st) - floor
        room = self.fits(st, 1)
        top = st[0] if avail >= 1 else None
        second = st[1] if avail >= 2 else None
        opts = []

        def add(weight, fn):
            opts.append((weight, fn))

        if room:
            add(3, lambda: self.one(self.push(t := gen_ty(rng, 1)), (t,) + st))
            add(1, lambda: self.one(UNIT, (UNIT_T,) + st))
            add(1, lambda: self.one(AMOUNT, (MUTEZ_T,) + st))
            add(1, lambda: self.one(TyArg("NIL", (t := gen_ty(rng, 1),)), (TList(t),) + st))
            add(1, lambda: self.one(TyArg("NONE", (t := gen_ty(rng, 1),)), (TOption(t),) + st))
            add(1, lambda: self.one(TyArg("EMPTY_MAP", (k := rng.choice(_KEYS), v := gen_ty(rng, 1))),
                                    (TMap(k, v),) + st))
            # PUSH; DROP n shapes
            add(1, lambda: self.push_drop(st, avail))
        if avail >= 1:
            if room:
                add(2, lambda: self.one(DUP, (top,) + st))
            add(2, lambda: self.drop(st, avail))
            add(1, lambda: self.one(SOME, (TOption(top),) + st[1:]))
            add(1, lambda: self.one(TyArg("LEFT", (t := gen_ty(rng, 1),)), (TOr(top, t),) + st[1:]))
            add(1, lambda: self.one(TyArg("RIGHT", (t := gen_ty(rng, 1),)), (TOr(t, top),) + st[1:]))
            add(2, lambda: self.dig_dug(st, avail))
            add(1, lambda: ([Dig(n := rng.randrange(avail)), Dug(n)], st))
            if depth > 1:
                add(2, lambda: self.dip(st, depth, floor, loops, avail))
                add(1, lambda: self.nested_seq(st, depth, floor, loops))
        if avail >= 2:
            add(2, lambda: self.one(SWAP, (second, top) + st[2:]))
            add(1, lambda: ([SWAP, SWAP], st))
            add(2, lambda: self.one(PAIR, (TPair(top, second),) + st[2:]))
            if (str(top), str(second)) in ADD_TABLE:
                add(2, lambda: self.one(ADD, (ADD_TABLE[str(top), str(second)],) + st[2:]))
            if (str(top), str(second)) in SUB_TABLE:
                add(2, lambda: self.one(SUB, (SUB_TABLE[str(top), str(second)],) + st[2:]))
            if top == second and core.is_comparable(top):
                add(2, lambda: self.one(COMPARE, (INT_T,) + st[2:]))
            if second == TList(top):
                add(2, lambda: self.one(CONS, st[1:]))
            if isinstance(second, TMap) and second.key == top:
                add(2, lambda: self.one(GET, (TOption(second.value),) + st[2:]))
                add(1, lambda: self.one(MEM, (BOOL_T,) + st[2:]))
        match top:
            case TPair(l, r):
                add(3, lambda: self.one(CAR, (l,) + st[1:]))
                add(3, lambda: self.one(CDR, (r,) + st[1:]))
            case TBool():
                add(2, lambda: self.one(NOT, st))
                if depth > 1:
                    add(4, lambda: self.if_(st, depth, floor, loops))
            case TInt():
                for op in ("EQ", "NEQ", "GT", "GE", "LT", "LE"):
                    add(1, lambda op=op: self.one(Prim(op), (BOOL_T,) + st[1:]))
            case TOption(e) if depth > 1:
                add(4, lambda: self.if_none(st, depth, floor, loops))
            case TOr() if depth > 1:
                add(4, lambda: self.if_left(st, depth, floor, loops))
            case TList(e) if room:
                add(2, lambda: ([self.push(e), CONS], st))
            case TMap(k, v) if room:
                add(2, lambda: ([self.push(k), GET], (TOption(v),) + st[1:]))
                if self.fits(st, 2):
                    add(2, lambda: ([self.push(TOption(v)), self.push(k), UPDATE], st))
        if isinstance(top, _NUMERIC) and room:
            op = rng.choice((ADD, SUB))
            ty = top
            table = ADD_TABLE if op == ADD else SUB_TABLE
            add(3, lambda: ([self.push(ty), op], (table[str(ty), str(ty)],) + st[1:]))
        if core.is_comparable(top) and room:
            add(2, lambda: ([self.push(top), COMPARE], (INT_T,) + st[1:]))
        if depth > 2 and loops < 2 and self.fits(st, 2):
            add(2, lambda: self.loop(st, depth, floor, loops))

        if not opts:  # nothing visible and no room to push
            return [], st
        weights = [w for w, _ in opts]
        _, fn = rng.choices(opts, weights)[0]
        return fn()

    @staticmethod
    def one(ins, st):
        return [ins], st

    def drop(self, st, avail):
        n = self.rng.randint(0, min(avail, 3))
        return [Drop(n)], st[n:]

    def dig_dug(self, st, avail):
        n = self.rng.randrange(avail)
        if self.rng.random() < 0.5:
            return [Dig(n)], (st[n],) + st[:n] + st[n + 1:]
        return [Dug(n)], st[1:n + 1] + (st[0],) + st[n + 1:]

    def push_drop(self, st, avail):
        n = self.rng.randint(1, min(avail, 2) + 1)
        return [self.push(gen_ty(self.rng, 1)), Drop(n)], st[n - 1:]

    def dip(self, st, depth, floor, loops, avail):
        n = self.rng.randint(0, min(avail, 3))
        self.hidden += n
        body, out = self.seq(st[n:], depth - 1, floor, loops)
        self.hidden -= n
        return [Dip(n, tuple(body))], (None if out is None else st[:n] + out)

    def nested_seq(self, st, depth, floor, loops):
        body, out = self.seq(st, depth - 1, floor, loops)
        return [Seq(tuple(body))], out

    def fail_block(self, st, floor):
        if st and (self.rng.random() < 0.5 or not self.fits(st, 1)):
            return [FAILWITH]
        return [self.push(gen_ty(self.rng, 1)), FAILWITH]

    def neutral(self, st, depth, floor, loops):
        """A block of type ``st -> st``; the output is ``None`` if it always fails."""
        prefix = []
        inner_st = st
        if len(st) > floor and self.fits(st, 1) and self.rng.random() < 0.5:
            prefix, inner_st = [DUP], (st[0],) + st
        body, out = self.seq(inner_st, depth, len(st), loops)
        if out is None:
            return prefix + body, None
        extra = len(out) - len(st)
        return prefix + body + ([Drop(extra)] if extra else []), st

    def block_to(self, st, target, depth, floor, loops):
        """A block from ``st`` to ``target``, or ``None`` if none was found."""
        if target is None:
            return self.fail_block(st, floor)
        for _ in range(6):
            body, out = self.seq(st, depth, floor, loops)
            if out is None or out == target:
                return body
        if target == st:
            return self.neutral(st, depth, floor, loops)[0]
        return None

    def if_(self, st, depth, floor, loops):
        rest = st[1:]
        a, out = self.seq(rest, depth - 1, floor, loops)
        b = self.block_to(rest, out, depth - 1, floor, loops)
        if b is None:
            b = list(a) if self.rng.random() < 0.5 else self.fail_block(rest, floor)
        if self.rng.random() < 0.5:
            a, b = b, a
        return [If(tuple(a), tuple(b))], out

    def if_none(self, st, depth, floor, loops):
        rng = self.rng
        rest, elem = st[1:], st[0].elem
        if rng.random() < 0.4:
            return [IfNone((self.push(elem),), ())], (elem,) + rest
        if rng.random() < 0.3:
            return [IfNone(tuple(self.fail_block(rest, floor)), ())], (elem,) + rest
        a, out = self.seq(rest, depth - 1, floor, loops)
        b = self.block_to(rest, out, depth - 1, floor, loops)
        if b is None:
            b = list(a)
        return [IfNone(tuple(a), (Drop(1), *b))], out

    def if_left(self, st, depth, floor, loops):
        rest = st[1:]
        a, out = self.seq(rest, depth - 1, floor, loops)
        b = self.block_to(rest, out, depth - 1, floor, loops)
        if b is None:
            b = list(a)
        return [IfLeft((Drop(1), *a), (Drop(1), *b))], out

    def loop(self, st, depth, floor, loops):
        count = self.rng.randint(0, MAX_LOOP_ITERATIONS)
        # the body is LOOP > DIP > inner, hence two levels
        self.hidden += 1
        inner, out = self.neutral(st, depth - 2, floor, loops + 1)
        self.hidden -= 1
        body = (Dip(1, tuple(inner)),)
        if out is not None:
            body += (Push(INT_T, value_to_literal(Int(1))), SWAP, SUB, DUP, Prim("GT"))
        code = [Push(INT_T, value_to_literal(Int(count))), DUP, Prim("GT"), Loop(body), Drop(1)]
        return code, st


def program_depth(code) -> int:
    """Nesting depth; a flat sequence of primitives has depth 1."""
    return max((1 + max((program_depth(b) for b in bodies(i)), default=0) for i in code),
               default=0)


def stack_width(ts: TypedSeq, hidden: int = 0) -> int:
    """Largest stack reached, counting the slots a DIP has set aside."""
    w = len(ts.inp) + hidden
    for t in ts.instrs:
        if t.out is not None:
            w = max(w, len(t.out) + hidden)
        extra = t.instr.n if isinstance(t.instr, Dip) else 0
        for b in t.bodies:
            w = max(w, stack_width(b, hidden + extra))
    return w


def gen_typed_program(seed, max_depth: int, input_ty) -> tuple[tuple, tuple | None]:
    """Random code that typechecks against ``input_ty`` by construction.

    Returns the code and its output stack type (``None`` when every path
    fails).  Deterministic in ``seed``.
    """
    code, out = _Gen(_rng(seed)).seq(tuple(input_ty), max_depth, 0, steps=(2, 10))
    return tuple(code), out


# ---------------------------------------------------------------------------
# Random postconditions


def gen_postcondition(seed, out_ty, witness: tuple | None = None) -> Predicate:
    """A random predicate over stacks of type ``out_ty``.

    When ``witness`` (a stack of that type) is given, some predicates are
    built to hold on it, so both outcomes of a check are exercised.
    """
    rng = _rng(seed)
    choices = ["true", "false", "top-eq", "hash"]
    if witness is not None:
        choices += ["witness", "witness", "slot", "slot-neg"]
    kind = rng.choice(choices)
    match kind:
        case "true":
            return TRUE_POST
        case "false":
            return Predicate(lambda s: False, "false")
        case "witness":
            return Predicate(lambda s: s == witness, "output equals witness")
        case "slot" | "slot-neg" if witness:
            i = rng.randrange(len(witness))
            v = witness[i]
            if kind == "slot":
                return Predicate(lambda s: s[i] == v, f"slot {i} equals witness")
            return Predicate(lambda s: s[i] != v, f"slot {i} differs from witness")
        case "top-eq" if out_ty:
            v = gen_value(rng, out_ty[0])
            return Predicate(lambda s: s[0] == v, "top equals random value")
        case "hash":
            salt = str(rng.randrange(1 << 30))
            return Predicate(lambda s: zlib.crc32((salt + repr(s)).encode()) % 2 == 0,
                             f"hash parity {salt}")
    return TRUE_POST


def describe_program(code) -> str:
    return print_block(code)
