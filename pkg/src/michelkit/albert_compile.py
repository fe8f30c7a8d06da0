"""Compilation of typed Albert contracts to Michelson.

At every program point the live variables sit on the stack sorted by
name, the smallest on top.  A statement brings its operands to the top
with ``DIG``, computes, and sinks each result to its sorted position with
``DUG``.  Records become right-nested pairs with fields in label order,
variants become right-nested ``or`` types in declaration order, and
function calls are inlined.  The layout is deliberately naive; run
:func:`michelkit.optimize.cleanup` on the output to tidy it up.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import core
from .albert import (
    Amount, AssertSome, Assign, BinOp, Call, CallS, Const, Ctor, DropS, Dup, FailWith,
    MapGet, Match, Nil, NoneE, PRecord, PTuple, PVar, Proj, Record, RecordLit, TRecord,
    TVariant, TypedAlbert, TypedFun, Update, Var, Variant, _int_literal_ty,
    const_value, eval_albert, typecheck_albert,
)
from .core import (
    BOOL_T, STRING_T, UNIT_T, Env, Failed, OutOfFuel, TBool, TList, TMap, TOption, TOr,
    TPair,
)
from .interp import ContractOutput, run_contract
from .syntax import (
    CAR, CDR, DUP, FAILWITH, PAIR, SWAP, UNIT, ContractSrc, Dig, Drop, Dug, If, IfLeft,
    IfNone, Prim, Push, TyArg, map_bodies, value_to_literal,
)
from .typecheck import MichelsonTypeError, typecheck_contract
from .verify import Report, _gen_mutez, gen_value


class AlbertCompileError(Exception):
    pass


# ---------------------------------------------------------------------------
# Types and values


def _right_nest(parts: list, ctor):
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = ctor(p, out)
    return out


def compile_ty(t):
    """The Michelson type representing values of the resolved Albert type ``t``."""
    match t:
        case TRecord(fields):
            if not fields:
                raise AlbertCompileError("empty record types have no Michelson representation")
            return _right_nest([compile_ty(ft) for _, ft in fields], TPair)
        case TVariant(ctors):
            if not ctors:
                raise AlbertCompileError("empty variant types have no Michelson representation")
            return _right_nest([compile_ty(ct) for _, ct in ctors], TOr)
        case TPair(l, r):
            return TPair(compile_ty(l), compile_ty(r))
        case TOr(l, r):
            return TOr(compile_ty(l), compile_ty(r))
        case TOption(e):
            return TOption(compile_ty(e))
        case TList(e):
            return TList(compile_ty(e))
        case TMap(k, v):
            return TMap(compile_ty(k), compile_ty(v))
    return t


def to_michelson(v, t):
    """Translate an Albert value of type ``t`` to its compiled Michelson value."""
    match t:
        case TRecord(fields):
            return _right_nest([to_michelson(v[l], ft) for l, ft in fields], core.Pair)
        case TVariant(ctors):
            names = [c for c, _ in ctors]
            i = names.index(v.ctor)
            out = to_michelson(v.payload, ctors[i][1])
            if i < len(ctors) - 1:
                out = core.Left(out)
            for _ in range(i):
                out = core.Right(out)
            return out
        case TPair(l, r):
            return core.Pair(to_michelson(v.left, l), to_michelson(v.right, r))
        case TOr(l, r):
            if isinstance(v, core.Left):
                return core.Left(to_michelson(v.value, l))
            return core.Right(to_michelson(v.value, r))
        case TOption(e):
            return v if isinstance(v, core.NoneV) else core.Some(to_michelson(v.value, e))
        case TList(e):
            return core.List(tuple(to_michelson(x, e) for x in v.items))
        case TMap(k, e):
            return core.Map(tuple((to_michelson(a, k), to_michelson(b, e)) for a, b in v.entries))
    return v


def from_michelson(v, t):
    """Inverse of :func:`to_michelson`."""
    match t:
        case TRecord(fields):
            out = []
            for i, (label, ft) in enumerate(fields):
                if i == len(fields) - 1:
                    out.append((label, from_michelson(v, ft)))
                else:
                    out.append((label, from_michelson(v.left, ft)))
                    v = v.right
            return Record(tuple(out))
        case TVariant(ctors):
            for i, (name, ct) in enumerate(ctors):
                if i == len(ctors) - 1:
                    return Variant(name, from_michelson(v, ct))
                if isinstance(v, core.Left):
                    return Variant(name, from_michelson(v.value, ct))
                v = v.value
        case TPair(l, r):
            return core.Pair(from_michelson(v.left, l), from_michelson(v.right, r))
        case TOr(l, r):
            if isinstance(v, core.Left):
                return core.Left(from_michelson(v.value, l))
            return core.Right(from_michelson(v.value, r))
        case TOption(e):
            return v if isinstance(v, core.NoneV) else core.Some(from_michelson(v.value, e))
        case TList(e):
            return core.List(tuple(from_michelson(x, e) for x in v.items))
        case TMap(k, e):
            return core.Map(tuple((from_michelson(a, k), from_michelson(b, e)) for a, b in v.entries))
    return v


# ---------------------------------------------------------------------------
# Code generation


class _Frame:
    """Emits code for one function body while tracking the stack layout.

    ``names`` mirrors the stack, top first: a variable name, or ``None``
    for an intermediate value not bound to a name yet.
    """

    def __init__(self, typed: TypedAlbert, names: list):
        self.typed = typed
        self.names = names
        self.code: list = []
        self.failed = False

    def emit(self, ins, pops: int = 0, pushes: int = 0):
        self.code.append(ins)
        del self.names[:pops]
        self.names[:0] = [None] * pushes

    def bring(self, name: str):
        pos = self.names.index(name)
        if pos:
            self.code.append(Dig(pos))
        del self.names[pos]
        self.names.insert(0, None)

    def place(self, k: int):
        """Sink the ``k`` named values on top into their sorted positions."""
        for i in range(k):
            name = self.names.pop(0)
            above = k - 1 - i
            target = above + sum(1 for n in self.names[above:] if n < name)
            if target:
                self.code.append(Dug(target))
            self.names.insert(target, name)

    def const_ty(self, a):
        if a.ty is not None:
            return self.typed.resolve(a.ty)
        if a.value is None:
            return UNIT_T
        if isinstance(a.value, bool):
            return BOOL_T
        if isinstance(a.value, int):
            return _int_literal_ty(a.value)
        return STRING_T

    def push_atom(self, a):
        match a:
            case Var(name):
                self.bring(name)
            case Const():
                ty = self.const_ty(a)
                if ty == UNIT_T:
                    self.emit(UNIT, pushes=1)
                else:
                    v = const_value(a, ty)
                    self.emit(Push(compile_ty(ty), value_to_literal(v)), pushes=1)
            case RecordLit(fields):
                if not fields:
                    raise AlbertCompileError("empty records cannot be stored on the stack")
                self.build(sorted(fields, key=lambda f: f[0]))
            case Nil(ty):
                self.emit(TyArg("NIL", (compile_ty(self.typed.resolve(ty).elem),)), pushes=1)
            case NoneE(ty):
                self.emit(TyArg("NONE", (compile_ty(self.typed.resolve(ty).elem),)), pushes=1)
            case _:
                raise AlbertCompileError(f"unsupported operand {a!r}")

    def build(self, fields):
        """Push a record from ``(label, atom)`` pairs sorted by label."""
        self.push_atom(fields[-1][1])
        for _, a in reversed(fields[:-1]):
            self.push_atom(a)
            self.emit(PAIR, pops=2, pushes=1)

    def destructure(self, names: list):
        """Split the record on top into fields bound to ``names`` (in label order)."""
        for name in names[:-1]:
            self.code += [DUP, CAR, SWAP, CDR]
            self.names.insert(1, name)
        self.names[0] = names[-1]
        self.place(len(names))

    def inline(self, callee: TypedFun, pack: bool = False) -> _Frame:
        """Run ``callee``'s body on the argument record on top of the stack.

        With ``pack`` the produced variables are paired back into one record.
        """
        labels = list(callee.consumed.labels)
        sub = _Frame(self.typed, [None] if labels else [])
        if labels:
            sub.destructure(labels)
        sub.body(callee.body)
        if pack and not sub.failed:
            out = list(callee.produced.labels)
            if not out:
                raise AlbertCompileError("empty records cannot be stored on the stack")
            sub.build([(l, Var(l)) for l in out])
        self.code += sub.code
        del self.names[:1 if labels else 0]
        return sub

    def push_arg(self, arg, callee: TypedFun):
        if callee.consumed.labels:
            self.push_atom(arg)

    def body(self, stmts):
        for t in stmts:
            self.stmt(t)

    def stmt(self, t):
        s = t.stmt
        match s:
            case Assign(PTuple((a, b)), Dup(var)):
                self.bring(var)
                self.emit(DUP, pushes=1)
                self.names[:2] = [a, b]
                self.place(2)
            case Assign(lhs, rhs):
                self.rhs(rhs, t.info)
                match lhs:
                    case PVar(name):
                        self.names[0] = name
                        self.place(1)
                    case PRecord(fields):
                        self.destructure([x for _, x in sorted(fields)])
            case DropS(var):
                self.bring(var)
                self.emit(Drop(1), pops=1)
            case FailWith(arg):
                self.push_atom(arg)
                self.emit(FAILWITH, pops=1)
                self.failed = True
            case CallS(_, arg):
                callee = t.info["callee"]
                self.push_arg(arg, callee)
                sub = self.inline(callee)
                if sub.failed:
                    self.failed = True
                else:
                    self.names[:0] = sub.names
                    self.place(len(sub.names))
            case Match(var):
                self.match(var, t.info["rhs_ty"], t.info["arms"])
            case _:
                raise AlbertCompileError(f"cannot compile {s!r}")

    def rhs(self, e, info):
        match e:
            case Var() | Const() | RecordLit() | Nil() | NoneE():
                self.push_atom(e)
            case Proj(var, label):
                rec = info["record"]
                self.bring(var)
                i, n = rec.labels.index(label), len(rec.fields)
                self.code += [CDR] * i + ([CAR] if i < n - 1 else [])
            case MapGet(var, key):
                self.bring(var)
                self.push_atom(key)
                self.emit(Prim("GET"), pops=2, pushes=1)
            case BinOp(op, left, right):
                self.push_atom(right)
                self.push_atom(left)
                if op == "+":
                    self.emit(Prim("ADD"), pops=2, pushes=1)
                else:
                    self.emit(Prim("COMPARE"), pops=2, pushes=1)
                    self.code.append(Prim("GE"))
            case Ctor(name, arg):
                self.push_atom(arg)
                if name == "Some":
                    self.code.append(Prim("SOME"))
                else:
                    self.inject(info["variant"], name)
            case Call(_, arg):
                callee = info["callee"]
                self.push_arg(arg, callee)
                sub = self.inline(callee, pack=True)
                self.failed = self.failed or sub.failed
                self.names.insert(0, None)
            case Amount():
                self.emit(Prim("AMOUNT"), pushes=1)
            case Update(m, k, v):
                self.push_atom(m)
                self.push_atom(v)
                self.push_atom(k)
                self.emit(Prim("UPDATE"), pops=3, pushes=1)
            case AssertSome(arg):
                self.push_atom(arg)
                self.code.append(IfNone((UNIT, FAILWITH), ()))
            case _:
                raise AlbertCompileError(f"cannot compile {e!r}")

    def inject(self, variant: TVariant, name: str):
        ctors = variant.ctors
        i = [c for c, _ in ctors].index(name)
        if i < len(ctors) - 1:
            rest = _right_nest([compile_ty(t) for _, t in ctors[i + 1:]], TOr)
            self.code.append(TyArg("LEFT", (rest,)))
        for j in range(i - 1, -1, -1):
            self.code.append(TyArg("RIGHT", (compile_ty(ctors[j][1]),)))

    def arm(self, arms: dict, ctor: str, payload_on_stack: bool) -> _Frame:
        arm, body = arms[ctor]
        sub = _Frame(self.typed, list(self.names))
        if not payload_on_stack:
            sub.emit(UNIT, pushes=1)
        else:
            sub.names.insert(0, None)
        sub.names[0] = arm.binder
        sub.place(1)
        sub.body(body)
        return sub

    def match(self, var: str, ty, arms: dict):
        self.bring(var)
        del self.names[0]
        match ty:
            case TBool():
                subs = [self.arm(arms, "True", False), self.arm(arms, "False", False)]
                self.code.append(If(tuple(subs[0].code), tuple(subs[1].code)))
            case TOption():
                subs = [self.arm(arms, "None", False), self.arm(arms, "Some", True)]
                self.code.append(IfNone(tuple(subs[0].code), tuple(subs[1].code)))
            case TOr():
                subs = [self.arm(arms, "Left", True), self.arm(arms, "Right", True)]
                self.code.append(IfLeft(tuple(subs[0].code), tuple(subs[1].code)))
            case TVariant(ctors):
                subs = []

                def peel(i):
                    if i == len(ctors) - 1:
                        sub = self.arm(arms, ctors[i][0], True)
                        subs.append(sub)
                        return tuple(sub.code)
                    sub = self.arm(arms, ctors[i][0], True)
                    subs.append(sub)
                    return (IfLeft(tuple(sub.code), peel(i + 1)),)

                self.code += peel(0)
        live = [s for s in subs if not s.failed]
        if not live:
            self.failed = True
            return
        if any(s.names != live[0].names for s in live):
            raise AlbertCompileError("match arms leave different stack layouts")
        self.names = list(live[0].names)


def compile_contract(c, main: str) -> ContractSrc:
    """Compile function ``main`` of an Albert contract to a Michelson contract.

    ``main`` must consume ``{param; store}`` and produce
    ``{operations : list operation; store}`` with the same storage type.
    """
    typed = c if isinstance(c, TypedAlbert) else typecheck_albert(c)
    try:
        tf = typed.fun(main)
    except KeyError:
        raise AlbertCompileError(f"unknown main function {main!r}") from None
    param_ty, store_ty = check_main_signature(tf)
    frame = _Frame(typed, [None])
    frame.destructure(["param", "store"])
    frame.body(tf.body)
    if not frame.failed:
        frame.build([("operations", Var("operations")), ("store", Var("store"))])
    return ContractSrc(compile_ty(param_ty), compile_ty(store_ty), tuple(frame.code))


def check_main_signature(tf: TypedFun):
    cons, prod = tf.consumed, tf.produced
    ok = (cons.labels == ("param", "store") and prod.labels == ("operations", "store")
          and prod.field_ty("operations") == TList(core.OPERATION_T)
          and prod.field_ty("store") == cons.field_ty("store"))
    if not ok:
        raise AlbertCompileError(
            f"{tf.fun.name} must have type {{param : p; store : s}} -> "
            f"{{operations : list operation; store : s}}, got {cons} -> {prod}")
    return cons.field_ty("param"), cons.field_ty("store")


# ---------------------------------------------------------------------------
# Differential checking


def gen_albert_value(rng: random.Random, t, size: int = 3):
    """A random Albert value of the resolved type ``t``."""
    match t:
        case TRecord(fields):
            return Record(tuple((l, gen_albert_value(rng, ft, size)) for l, ft in fields))
        case TVariant(ctors):
            name, ct = rng.choice(ctors)
            return Variant(name, gen_albert_value(rng, ct, size))
        case TPair(l, r):
            return core.Pair(gen_albert_value(rng, l, size), gen_albert_value(rng, r, size))
        case TOr(l, r):
            if rng.random() < 0.5:
                return core.Left(gen_albert_value(rng, l, size))
            return core.Right(gen_albert_value(rng, r, size))
        case TOption(e):
            return core.NONE if rng.random() < 0.3 else core.Some(gen_albert_value(rng, e, size))
        case TList(e):
            return core.List(tuple(gen_albert_value(rng, e, size - 1)
                                   for _ in range(rng.randint(0, max(size, 0)))))
        case TMap(k, e):
            entries = {}
            for _ in range(rng.randint(0, max(size, 0))):
                entries[gen_value(rng, k)] = gen_albert_value(rng, e, size - 1)
            return core.Map(tuple(entries.items()))
    return gen_value(rng, t, size)


@dataclass(frozen=True)
class DiffCounterexample:
    param: object
    store: object
    amount: int
    reason: str

    def __str__(self) -> str:
        from .albert import format_albert_value
        if self.param is None:
            return self.reason
        return (f"param={format_albert_value(self.param)} store={format_albert_value(self.store)} "
                f"amount={self.amount}: {self.reason}")


def swap_car_cdr(code) -> tuple:
    """Mutation used to sanity-check the differential oracle."""
    flip = {CAR: CDR, CDR: CAR}
    return tuple(flip.get(i, map_bodies(i, swap_car_cdr)) for i in code)


def compile_and_check(c, main: str, trials: int = 100, seed: int = 0, transform=None,
                      sampler=None, optimize: bool = False, fuel: int = 100_000) -> Report:
    """Differential test of the compiler on random inputs.

    Runs ``main`` with :func:`~michelkit.albert.eval_albert` and the compiled
    contract with :func:`~michelkit.interp.run_contract` on the same random
    (param, store, amount) triples and records every disagreement.
    ``transform`` rewrites the compiled code first (used for mutation
    tests); ``sampler(rng)`` may replace the default input generator.
    """
    from .optimize import cleanup

    typed = c if isinstance(c, TypedAlbert) else typecheck_albert(c)
    tf = typed.fun(main)
    param_ty, store_ty = check_main_signature(tf)
    src = compile_contract(typed, main)
    code = src.code
    if optimize:
        code = cleanup(code)
    if transform is not None:
        code = transform(code)
    report = Report()
    try:
        compiled = typecheck_contract(ContractSrc(src.parameter_ty, src.storage_ty, code))
    except MichelsonTypeError as e:
        report.counterexamples.append(
            DiffCounterexample(None, None, 0, f"compiled code does not typecheck: {e}"))
        return report
    rng = random.Random(seed)
    for _ in range(trials):
        if sampler is not None:
            param, store, amount = sampler(rng)
        else:
            param = gen_albert_value(rng, param_ty)
            store = gen_albert_value(rng, store_ty)
            amount = _gen_mutez(rng)
        report.trials += 1
        expected = eval_albert(typed, main, Record.of(param=param, store=store), amount)
        got = run_contract(compiled, to_michelson(param, param_ty), to_michelson(store, store_ty),
                           Env(amount), fuel)
        reason = _disagreement(expected, got, store_ty)
        report.tally("failed" if isinstance(expected, Failed) else "success")
        if reason:
            report.counterexamples.append(DiffCounterexample(param, store, amount, reason))
    return report


def _disagreement(expected, got, store_ty) -> str | None:
    if isinstance(got, OutOfFuel):
        return "compiled code ran out of fuel"
    if isinstance(expected, Failed):
        if not isinstance(got, Failed):
            return f"Albert failed with {expected.value!r} but compiled code succeeded"
        if got.value != expected.value:
            return f"failure payloads differ: {expected.value!r} vs {got.value!r}"
        return None
    if isinstance(got, Failed):
        return f"compiled code failed with {got.value!r}"
    assert isinstance(got, ContractOutput)
    store = from_michelson(got.storage, store_ty)
    if got.operations != expected["operations"].items or store != expected["store"]:
        return f"results differ: {expected!r} vs {got!r}"
    return None
