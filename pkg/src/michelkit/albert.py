"""Albert: records instead of stacks, checked by a linear type system.

A function is typed by a pair of record types: the variables it consumes
and the variables it produces.  Inside a body every live variable must be
consumed exactly once; ``dup`` is the only way to use a value twice and
``drop`` the only way to discard one.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import core
from .core import (
    BOOL_T, MUTEZ_T, NAT_T, INT_T, STRING_T, UNIT_T, Bool, Failed, TBool,
    TList, TMap, TOption, TOr, TPair,
)
from .interp import MichelsonFailure, add_values
from .typecheck import ADD_TABLE


class AlbertSyntaxError(Exception):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + message)


class AlbertTypeError(Exception):
    def __init__(self, message: str, loc: tuple | None = None):
        self.loc = loc
        where = f"{loc[0]}:{loc[1]}: " if loc else ""
        super().__init__(where + message)


class LinearityError(AlbertTypeError):
    pass


# ---------------------------------------------------------------------------
# Types (base Michelson types are reused from ``core``)


@dataclass(frozen=True)
class TRecord:
    """Record type; fields are kept sorted by label so field order is irrelevant."""

    fields: tuple  # ((label, ty), ...)

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(sorted(self.fields, key=lambda f: f[0])))

    @property
    def labels(self) -> tuple:
        return tuple(l for l, _ in self.fields)

    def field_ty(self, label: str):
        return dict(self.fields).get(label)

    def __str__(self) -> str:
        return "{ " + " ; ".join(f"{l} : {t}" for l, t in self.fields) + " }"


@dataclass(frozen=True)
class TVariant:
    ctors: tuple  # ((constructor, payload ty), ...) in declaration order

    def __str__(self) -> str:
        return "[ " + " | ".join(f"{c} : {t}" for c, t in self.ctors) + " ]"


@dataclass(frozen=True)
class TAlias:
    name: str

    def __str__(self) -> str:
        return self.name


# ---------------------------------------------------------------------------
# Values


@dataclass(frozen=True)
class Record:
    fields: tuple  # ((label, value), ...), sorted by label

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(sorted(self.fields, key=lambda f: f[0])))

    @classmethod
    def of(cls, **fields) -> Record:
        return cls(tuple(fields.items()))

    def __getitem__(self, label: str):
        return dict(self.fields)[label]


@dataclass(frozen=True)
class Variant:
    ctor: str
    payload: core.Value


# ---------------------------------------------------------------------------
# AST

_loc = dict(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Var:
    name: str
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Const:
    value: object  # python literal: int, str, bool or None (unit)
    ty: object | None = None  # explicit annotation
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class RecordLit:
    fields: tuple  # ((label, atom), ...) in source order
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Proj:
    var: str
    label: str
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class MapGet:
    var: str
    key: object
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Dup:
    var: str
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Ctor:
    name: str
    arg: object
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Call:
    fun: str
    arg: object
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Amount:
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Update:
    map: object
    key: object
    value: object
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class AssertSome:
    arg: object
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Nil:
    ty: object
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class NoneE:
    ty: object
    loc: tuple | None = field(**_loc)


# left-hand sides
@dataclass(frozen=True)
class PVar:
    name: str


@dataclass(frozen=True)
class PTuple:
    names: tuple


@dataclass(frozen=True)
class PRecord:
    fields: tuple  # ((label, var), ...)


# statements
@dataclass(frozen=True)
class Assign:
    lhs: object
    rhs: object
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Arm:
    ctor: str
    binder: str
    body: tuple


@dataclass(frozen=True)
class Match:
    var: str
    arms: tuple
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class FailWith:
    arg: object
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class DropS:
    var: str
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class CallS:
    """A call used as a statement: the callee's outputs become variables."""

    fun: str
    arg: object
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class AFun:
    name: str
    consumed: object
    produced: object
    body: tuple
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class AlbertContract:
    types: tuple  # ((name, ty), ...)
    funs: tuple   # AFun, ...

    def fun(self, name: str) -> AFun:
        for f in self.funs:
            if f.name == name:
                return f
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Lexer / parser

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*|//[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<punct>->|>=|<=|==|!=|[{}()\[\];:,=|.+\-*<>])
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)

KEYWORDS = frozenset({"type", "def", "match", "with", "end", "failwith", "drop", "dup",
                      "amount", "update", "assert_some"})
SUPPORTED_OPS = ("+", ">=")

_BASE_TYPES = {"unit": UNIT_T, "bool": BOOL_T, "nat": NAT_T, "int": INT_T,
               "mutez": MUTEZ_T, "string": STRING_T, "operation": core.OPERATION_T}
_TYPE_CTORS = {"list": (1, TList), "option": (1, TOption), "map": (2, TMap),
               "pair": (2, TPair), "or": (2, TOr)}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    out, pos, line, start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise AlbertSyntaxError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        if m.lastgroup not in ("ws", "comment"):
            out.append(_Tok(m.lastgroup, m.group(), line, pos - start + 1))
        chunk = m.group()
        if "\n" in chunk:
            line += chunk.count("\n")
            start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    out.append(_Tok("eof", "", line, pos - start + 1))
    return out


def _unescape(raw: str) -> str:
    esc = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}
    return re.sub(r"\\(.)", lambda m: esc.get(m.group(1), m.group(1)), raw[1:-1])


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.funs: set[str] = set()

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def loc(self) -> tuple:
        return (self.tok.line, self.tok.col)

    def error(self, msg: str):
        t = self.tok
        raise AlbertSyntaxError(f"{msg} (found {t.text or 'end of input'!r})", t.line, t.col)

    def next(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind != "string"

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.next()

    def ident(self) -> str:
        if self.tok.kind != "ident" or self.tok.text in KEYWORDS:
            self.error("expected an identifier")
        return self.next().text

    # types

    def ty(self):
        t = self.tok
        if t.kind == "ident" and t.text in _TYPE_CTORS:
            self.next()
            arity, ctor = _TYPE_CTORS[t.text]
            args = [self.ty_atom() for _ in range(arity)]
            try:
                return ctor(*args)
            except ValueError as e:
                raise AlbertSyntaxError(str(e), t.line, t.col) from None
        return self.ty_atom()

    def ty_atom(self):
        if self.accept("("):
            t = self.ty()
            self.expect(")")
            return t
        if self.accept("{"):
            fields = []
            while not self.accept("}"):
                label = self.ident()
                self.expect(":")
                fields.append((label, self.ty()))
                if not self.accept(";") and not self.at("}"):
                    self.error("expected ';' or '}'")
            return self._record(fields)
        if self.accept("["):
            ctors = []
            self.accept("|")
            while True:
                name = self.ident()
                self.expect(":")
                ctors.append((name, self.ty()))
                if not self.accept("|"):
                    break
            self.expect("]")
            if len({c for c, _ in ctors}) != len(ctors):
                self.error("duplicate constructor in variant type")
            return TVariant(tuple(ctors))
        t = self.tok
        if t.kind == "ident" and t.text in _BASE_TYPES:
            self.next()
            return _BASE_TYPES[t.text]
        if t.kind == "ident" and t.text in _TYPE_CTORS:
            return self.ty()
        return TAlias(self.ident())

    def _record(self, fields):
        if len({l for l, _ in fields}) != len(fields):
            self.error("duplicate label in record type")
        return TRecord(tuple(fields))

    # program

    def program(self) -> AlbertContract:
        types, funs = [], []
        while self.tok.kind != "eof":
            if self.accept("type"):
                name = self.ident()
                self.expect("=")
                types.append((name, self.ty()))
            elif self.at("def"):
                funs.append(self.fundef())
            else:
                self.error("expected 'type' or 'def'")
        return AlbertContract(tuple(types), tuple(funs))

    def fundef(self) -> AFun:
        loc = self.loc()
        self.expect("def")
        name = self.ident()
        self.expect(":")
        consumed = self.ty()
        self.expect("->")
        produced = self.ty()
        self.expect("=")
        self.funs.add(name)
        return AFun(name, consumed, produced, self.body(), loc=loc)

    def _body_end(self) -> bool:
        return self.tok.kind == "eof" or self.at("def") or self.at("type") or self.at("|") or self.at("end")

    def body(self) -> tuple:
        stmts = []
        while not self._body_end():
            stmts.append(self.stmt())
            if not self.accept(";"):
                break
        if not self._body_end():
            self.error("expected ';'")
        return tuple(stmts)

    def stmt(self):
        loc = self.loc()
        if self.accept("match"):
            var = self.ident()
            self.expect("with")
            self.accept("|")
            arms = []
            while True:
                ctor = self.ident()
                binder = self.ident()
                self.expect("->")
                arms.append(Arm(ctor, binder, self.body()))
                if not self.accept("|"):
                    break
            self.expect("end")
            return Match(var, tuple(arms), loc=loc)
        if self.accept("failwith"):
            return FailWith(self.atom(), loc=loc)
        if self.accept("drop"):
            return DropS(self.ident(), loc=loc)
        if self.accept("("):
            a = self.ident()
            self.expect(",")
            b = self.ident()
            self.expect(")")
            self.expect("=")
            return Assign(PTuple((a, b)), self.rhs(), loc=loc)
        if self.accept("{"):
            fields = []
            while not self.accept("}"):
                label = self.ident()
                self.expect("=")
                fields.append((label, self.ident()))
                if not self.accept(";") and not self.at("}"):
                    self.error("expected ';' or '}'")
            if len({l for l, _ in fields}) != len(fields):
                self.error("duplicate label in record pattern")
            self.expect("=")
            return Assign(PRecord(tuple(fields)), self.rhs(), loc=loc)
        name = self.ident()
        if self.accept("="):
            return Assign(PVar(name), self.rhs(), loc=loc)
        return CallS(name, self.call_arg(), loc=loc)

    def _starts_atom(self) -> bool:
        t = self.tok
        return t.kind in ("int", "string") or t.text in ("{", "(") or (
            t.kind == "ident" and t.text not in KEYWORDS)

    def call_arg(self):
        if self.at("{"):
            return self.record_lit()
        return self.atom()

    def record_lit(self) -> RecordLit:
        loc = self.loc()
        self.expect("{")
        fields = []
        while not self.accept("}"):
            label = self.ident()
            self.expect("=")
            fields.append((label, self.atom()))
            if not self.accept(";") and not self.at("}"):
                self.error("expected ';' or '}'")
        if len({l for l, _ in fields}) != len(fields):
            self.error("duplicate label in record")
        return RecordLit(tuple(fields), loc=loc)

    def atom(self):
        t = self.tok
        loc = (t.line, t.col)
        if t.kind == "int":
            self.next()
            return Const(int(t.text), loc=loc)
        if self.accept("-"):
            if self.tok.kind != "int":
                self.error("expected an integer")
            return Const(-int(self.next().text), loc=loc)
        if t.kind == "string":
            self.next()
            return Const(_unescape(t.text), loc=loc)
        if t.kind == "ident" and t.text in ("Unit", "True", "False"):
            self.next()
            return Const({"Unit": None, "True": True, "False": False}[t.text], loc=loc)
        if self.accept("("):
            if self.at("[") and self.peek().text == "]":
                self.next(), self.next()
                self.expect(":")
                ty = self.ty()
                self.expect(")")
                return Nil(ty, loc=loc)
            if self.at("None"):
                self.next()
                self.expect(":")
                ty = self.ty()
                self.expect(")")
                return NoneE(ty, loc=loc)
            inner = self.atom()
            if self.accept(":"):
                if not isinstance(inner, Const):
                    self.error("only constants can be annotated")
                inner = Const(inner.value, self.ty(), loc=loc)
            self.expect(")")
            return inner
        if t.kind == "ident" and t.text == "None":
            self.error("None needs a type annotation: (None : option t)")
        return Var(self.ident(), loc=loc)

    def rhs(self):
        t = self.tok
        loc = (t.line, t.col)
        if self.accept("dup"):
            return Dup(self.ident(), loc=loc)
        if self.accept("amount"):
            return Amount(loc=loc)
        if self.accept("update"):
            m = self.atom()
            k = self.atom()
            return Update(m, k, self.atom(), loc=loc)
        if self.accept("assert_some"):
            return AssertSome(self.call_arg(), loc=loc)
        if self.at("{"):
            return self.record_lit()
        if (t.kind == "ident" and t.text[:1].isupper()
                and t.text not in ("Unit", "True", "False", "None")):
            self.next()
            return Ctor(t.text, self.atom(), loc=loc)
        if t.kind == "ident" and t.text not in KEYWORDS:
            nxt = self.peek()
            if nxt.text == "." and nxt.kind == "punct":
                var = self.next().text
                self.next()
                return Proj(var, self.ident(), loc=loc)
            if nxt.text == "[":
                var = self.next().text
                self.next()
                key = self.atom()
                self.expect("]")
                return MapGet(var, key, loc=loc)
            if t.text in self.funs or (nxt.kind in ("ident", "int", "string")
                                       and nxt.text not in KEYWORDS) or nxt.text == "{":
                self.next()
                return Call(t.text, self.call_arg(), loc=loc)
        left = self.atom()
        if self.tok.kind == "punct" and self.tok.text in ("+", "-", "*", ">=", "<=", "<", ">", "==", "!="):
            op = self.next().text
            if op not in SUPPORTED_OPS:
                raise AlbertSyntaxError(f"unsupported operator {op!r}", *loc)
            return BinOp(op, left, self.atom(), loc=loc)
        return left


def parse_albert(text: str) -> AlbertContract:
    return _Parser(text).program()


# ---------------------------------------------------------------------------
# Type checking

@dataclass
class TStmt:
    """A statement with the typing environments around it.

    ``after`` is ``None`` when the statement never completes (it fails).
    ``info`` carries what compilation needs: the type of the right-hand
    side, the typed arms of a match, etc.
    """

    stmt: object
    before: dict
    after: dict | None
    info: dict = field(default_factory=dict)


@dataclass
class TypedFun:
    fun: AFun
    consumed: TRecord
    produced: TRecord
    body: list


@dataclass
class TypedAlbert:
    source: AlbertContract
    aliases: dict
    funs: dict  # name -> TypedFun, in definition order
    ctors: dict  # constructor -> variant type

    def resolve(self, ty):
        r = _Typer.__new__(_Typer)
        r.aliases = self.aliases
        return r.resolve(ty)

    def fun(self, name: str) -> TypedFun:
        if name not in self.funs:
            raise KeyError(f"unknown function {name!r}")
        return self.funs[name]


def match_ctors(ty) -> dict | None:
    """Constructors (name -> payload type) for a type that can be matched on."""
    match ty:
        case TBool():
            return {"False": UNIT_T, "True": UNIT_T}
        case TOption(e):
            return {"None": UNIT_T, "Some": e}
        case TOr(l, r):
            return {"Left": l, "Right": r}
        case TVariant(ctors):
            return dict(ctors)
    return None


def _int_literal_ty(n: int):
    return NAT_T if n >= 0 else INT_T


def const_value(c: Const, ty):
    """Runtime value of a constant of (resolved) type ``ty``."""
    v = c.value
    match ty:
        case core.TUnit() if v is None:
            return core.UNIT
        case TBool() if isinstance(v, bool):
            return Bool(v)
        case core.TNat() if type(v) is int and v >= 0:
            return core.Nat(v)
        case core.TInt() if type(v) is int:
            return core.Int(v)
        case core.TMutez() if type(v) is int and 0 <= v <= core.MUTEZ_MAX:
            return core.Mutez(v)
        case core.TString() if isinstance(v, str):
            return core.Str(v)
    raise AlbertTypeError(f"constant {v!r} does not have type {ty}", c.loc)


class _Typer:
    def __init__(self, contract: AlbertContract):
        self.aliases: dict = {}
        self.ctors: dict = {}
        self.funs: dict = {}
        for name, ty in contract.types:
            if name in self.aliases:
                raise AlbertTypeError(f"type {name} defined twice")
            resolved = self.resolve(ty)
            self.aliases[name] = resolved
            if isinstance(resolved, TVariant):
                for c, _ in resolved.ctors:
                    if c in self.ctors or c in ("True", "False", "Some", "None", "Left", "Right"):
                        raise AlbertTypeError(f"constructor {c} defined twice")
                    self.ctors[c] = resolved

    def resolve(self, ty, loc=None):
        match ty:
            case TAlias(name):
                if name not in self.aliases:
                    raise AlbertTypeError(f"unknown type {name}", loc)
                return self.aliases[name]
            case TRecord(fields):
                return TRecord(tuple((l, self.resolve(t, loc)) for l, t in fields))
            case TVariant(ctors):
                return TVariant(tuple((c, self.resolve(t, loc)) for c, t in ctors))
            case TPair(l, r):
                return TPair(self.resolve(l, loc), self.resolve(r, loc))
            case TOr(l, r):
                return TOr(self.resolve(l, loc), self.resolve(r, loc))
            case TOption(e):
                return TOption(self.resolve(e, loc))
            case TList(e):
                return TList(self.resolve(e, loc))
            case TMap(k, v):
                return TMap(self.resolve(k, loc), self.resolve(v, loc))
        return ty

    def fun(self, f: AFun) -> TypedFun:
        if f.name in self.funs:
            raise AlbertTypeError(f"function {f.name} defined twice", f.loc)
        consumed = self.resolve(f.consumed, f.loc)
        produced = self.resolve(f.produced, f.loc)
        if not isinstance(consumed, TRecord) or not isinstance(produced, TRecord):
            raise AlbertTypeError(f"function {f.name} must be typed by two record types", f.loc)
        env = dict(consumed.fields)
        body, out = self.body(f.body, env)
        if out is not None:
            for label, ty in produced.fields:
                if label not in out:
                    raise AlbertTypeError(f"function {f.name} does not produce {label!r}", f.loc)
                if out[label] != ty:
                    raise AlbertTypeError(
                        f"function {f.name} produces {label} : {out[label]}, expected {ty}", f.loc)
            extra = sorted(set(out) - set(produced.labels))
            if extra:
                raise LinearityError(
                    f"variable {extra[0]!r} is never consumed in function {f.name}", f.loc)
        tf = TypedFun(f, consumed, produced, body)
        self.funs[f.name] = tf
        return tf

    def body(self, stmts, env: dict):
        typed = []
        consumed: set = set()
        for s in stmts:
            if env is None:
                raise AlbertTypeError("unreachable statement after failure", s.loc)
            t = self.stmt(s, dict(env), consumed)
            typed.append(t)
            env = t.after
        return typed, env

    # variables

    def take(self, env: dict, name: str, consumed: set, loc):
        if name not in env:
            if name in consumed:
                raise LinearityError(f"variable {name!r} is used after being consumed", loc)
            raise AlbertTypeError(f"unbound variable {name!r}", loc)
        consumed.add(name)
        return env.pop(name)

    def bind(self, env: dict, name: str, ty, loc):
        if name in env:
            raise LinearityError(f"variable {name!r} is rebound while still live", loc)
        env[name] = ty

    def atom(self, a, env, consumed, expected=None):
        match a:
            case Var(name):
                return self.take(env, name, consumed, a.loc)
            case Const(v, ann):
                if ann is not None:
                    ty = self.resolve(ann, a.loc)
                elif v is None:
                    ty = UNIT_T
                elif isinstance(v, bool):
                    ty = BOOL_T
                elif isinstance(v, int):
                    ty = _int_literal_ty(v)
                else:
                    ty = STRING_T
                const_value(a, ty)
                return ty
            case RecordLit(fields):
                return TRecord(tuple((l, self.atom(x, env, consumed)) for l, x in fields))
            case Nil(ty):
                ty = self.resolve(ty, a.loc)
                if not isinstance(ty, TList):
                    raise AlbertTypeError(f"[] annotated with non-list type {ty}", a.loc)
                return ty
            case NoneE(ty):
                ty = self.resolve(ty, a.loc)
                if not isinstance(ty, TOption):
                    raise AlbertTypeError(f"None annotated with non-option type {ty}", a.loc)
                return ty
        raise AlbertTypeError(f"unexpected operand {a!r}")

    def rhs(self, e, env, consumed, info):
        loc = e.loc
        match e:
            case Var() | Const() | RecordLit() | Nil() | NoneE():
                return self.atom(e, env, consumed)
            case Proj(var, label):
                t = self.take(env, var, consumed, loc)
                if not isinstance(t, TRecord) or t.field_ty(label) is None:
                    raise AlbertTypeError(f"{var} : {t} has no field {label!r}", loc)
                info["record"] = t
                return t.field_ty(label)
            case MapGet(var, key):
                tm = self.take(env, var, consumed, loc)
                tk = self.atom(key, env, consumed)
                if not isinstance(tm, TMap) or tm.key != tk:
                    raise AlbertTypeError(f"cannot index {var} : {tm} with a key of type {tk}", loc)
                return TOption(tm.value)
            case Dup():
                raise AlbertTypeError("dup must be bound to a pair of names: (a, b) = dup x", loc)
            case BinOp(op, left, right):
                ta = self.atom(left, env, consumed)
                tb = self.atom(right, env, consumed)
                info["operands"] = (ta, tb)
                if op == "+":
                    res = ADD_TABLE.get((str(ta), str(tb)))
                    if res is None:
                        raise AlbertTypeError(f"cannot add {ta} and {tb}", loc)
                    return res
                if ta != tb or not core.is_comparable(ta):
                    raise AlbertTypeError(f"cannot compare {ta} with {tb}", loc)
                return BOOL_T
            case Ctor(name, arg):
                ta = self.atom(arg, env, consumed)
                if name == "Some":
                    return TOption(ta)
                if name not in self.ctors:
                    raise AlbertTypeError(f"unknown constructor {name}", loc)
                variant = self.ctors[name]
                if dict(variant.ctors)[name] != ta:
                    raise AlbertTypeError(f"constructor {name} expects {dict(variant.ctors)[name]}, got {ta}", loc)
                info["variant"] = variant
                return variant
            case Call(fun, arg):
                callee = self.callee(fun, loc)
                ta = self.atom(arg, env, consumed)
                if ta != callee.consumed:
                    raise AlbertTypeError(f"{fun} expects {callee.consumed}, got {ta}", loc)
                info["callee"] = callee
                return callee.produced
            case Amount():
                return MUTEZ_T
            case Update(m, k, v):
                tm = self.atom(m, env, consumed)
                tk = self.atom(k, env, consumed)
                tv = self.atom(v, env, consumed)
                if not isinstance(tm, TMap) or tm.key != tk or tv != TOption(tm.value):
                    raise AlbertTypeError(f"bad update: map {tm}, key {tk}, value {tv}", loc)
                return tm
            case AssertSome(arg):
                ta = self.atom(arg, env, consumed)
                if not (isinstance(ta, TRecord) and ta.labels == ("opt",)
                        and isinstance(ta.fields[0][1], TOption)):
                    raise AlbertTypeError(f"assert_some expects {{opt : option _}}, got {ta}", loc)
                return TRecord((("res", ta.fields[0][1].elem),))
        raise AlbertTypeError(f"unsupported expression {e!r}", loc)

    def callee(self, name, loc) -> TypedFun:
        if name not in self.funs:
            raise AlbertTypeError(f"call to undefined function {name!r} "
                                  "(functions must be defined before use)", loc)
        return self.funs[name]

    def stmt(self, s, env: dict, consumed: set) -> TStmt:
        before = dict(env)
        info: dict = {}
        match s:
            case Assign(lhs, rhs):
                if isinstance(rhs, Dup):
                    if not isinstance(lhs, PTuple):
                        raise AlbertTypeError("dup must be bound to a pair of names", s.loc)
                    ty = self.take(env, rhs.var, consumed, s.loc)
                    a, b = lhs.names
                    if a == b:
                        raise LinearityError(f"dup binds {a!r} twice", s.loc)
                    self.bind(env, a, ty, s.loc)
                    self.bind(env, b, ty, s.loc)
                    info["rhs_ty"] = ty
                    return TStmt(s, before, env, info)
                ty = self.rhs(rhs, env, consumed, info)
                info["rhs_ty"] = ty
                match lhs:
                    case PVar(name):
                        self.bind(env, name, ty, s.loc)
                    case PTuple():
                        raise AlbertTypeError("only dup produces a pair of names", s.loc)
                    case PRecord(fields):
                        if not isinstance(ty, TRecord) or set(ty.labels) != {l for l, _ in fields}:
                            raise AlbertTypeError(f"pattern does not match record type {ty}", s.loc)
                        names = [x for _, x in fields]
                        if len(set(names)) != len(names):
                            raise LinearityError("record pattern binds a name twice", s.loc)
                        for label, x in fields:
                            self.bind(env, x, ty.field_ty(label), s.loc)
                return TStmt(s, before, env, info)
            case DropS(var):
                info["rhs_ty"] = self.take(env, var, consumed, s.loc)
                return TStmt(s, before, env, info)
            case FailWith(arg):
                info["rhs_ty"] = self.atom(arg, env, consumed)
                return TStmt(s, before, None, info)
            case CallS(fun, arg):
                callee = self.callee(fun, s.loc)
                ta = self.atom(arg, env, consumed)
                if ta != callee.consumed:
                    raise AlbertTypeError(f"{fun} expects {callee.consumed}, got {ta}", s.loc)
                info["callee"] = callee
                info["rhs_ty"] = ta
                for label, ty in callee.produced.fields:
                    self.bind(env, label, ty, s.loc)
                return TStmt(s, before, env, info)
            case Match(var, arms):
                ty = self.take(env, var, consumed, s.loc)
                ctors = match_ctors(ty)
                if ctors is None:
                    raise AlbertTypeError(f"cannot match on {var} : {ty}", s.loc)
                seen = [a.ctor for a in arms]
                if sorted(seen) != sorted(ctors):
                    raise AlbertTypeError(
                        f"match on {ty} must have exactly one arm per constructor "
                        f"{sorted(ctors)}, got {seen}", s.loc)
                typed_arms = {}
                out = None
                for arm in arms:
                    arm_env = dict(env)
                    self.bind(arm_env, arm.binder, ctors[arm.ctor], s.loc)
                    body, arm_out = self.body(arm.body, arm_env)
                    typed_arms[arm.ctor] = (arm, body)
                    if arm_out is None:
                        continue
                    if out is not None and out != arm_out:
                        raise AlbertTypeError(
                            "match arms produce different variables: "
                            f"{_env_str(out)} vs {_env_str(arm_out)}", s.loc)
                    out = arm_out
                info["rhs_ty"] = ty
                info["arms"] = typed_arms
                return TStmt(s, before, out, info)
        raise AlbertTypeError(f"unsupported statement {s!r}", getattr(s, "loc", None))


def _env_str(env: dict) -> str:
    return "{" + "; ".join(f"{k} : {env[k]}" for k in sorted(env)) + "}"


def typecheck_albert(c: AlbertContract) -> TypedAlbert:
    t = _Typer(c)
    for f in c.funs:
        t.fun(f)
    return TypedAlbert(c, t.aliases, t.funs, t.ctors)


# ---------------------------------------------------------------------------
# Big-step evaluation


class AlbertFailure(Exception):
    def __init__(self, value):
        super().__init__(value)
        self.value = value


class LinearityViolation(RuntimeError):
    pass


class AEnv:
    """Evaluation environment; reading a variable consumes its binding.

    Every binding gets a serial number and ``reads`` counts how often each
    one was read, which lets tests confirm that each value is used once.
    """

    def __init__(self, values: dict | None = None, reads: dict | None = None):
        self.values: dict = {}
        self.ids: dict = {}
        self.reads = reads if reads is not None else {}
        for k, v in (values or {}).items():
            self.bind(k, v)

    def bind(self, name, value):
        if name in self.values:
            raise LinearityViolation(f"{name} rebound while live")
        serial = len(self.reads)
        self.reads[serial] = 0
        self.values[name] = value
        self.ids[name] = serial

    def take(self, name):
        if name not in self.values:
            raise LinearityViolation(f"{name} read after being consumed")
        self.reads[self.ids.pop(name)] += 1
        return self.values.pop(name)


class _Evaluator:
    def __init__(self, typed: TypedAlbert, amount: int, reads: dict):
        self.typed = typed
        self.amount = amount
        self.reads = reads

    def call(self, tf: TypedFun, arg: Record) -> Record:
        env = AEnv(dict(arg.fields), self.reads)
        self.body(tf.body, env)
        out = Record(tuple((l, env.take(l)) for l in tf.produced.labels))
        if env.values:
            raise LinearityViolation(f"live variables left at end of {tf.fun.name}: {sorted(env.values)}")
        return out

    def body(self, stmts, env: AEnv):
        for t in stmts:
            self.stmt(t, env)

    def atom(self, a, env: AEnv, ty=None):
        match a:
            case Var(name):
                return env.take(name)
            case Const():
                return const_value(a, ty)
            case RecordLit(fields):
                return Record(tuple((l, self.atom(x, env, ty.field_ty(l) if ty else None))
                                    for l, x in fields))
            case Nil():
                return core.List()
            case NoneE():
                return core.NONE
        raise TypeError(a)

    def operand_ty(self, a):
        """Type of a constant operand, chosen exactly as the checker chose it."""
        match a:
            case Const(v, ann):
                if ann is not None:
                    return self.typed.resolve(ann)
                if v is None:
                    return UNIT_T
                if isinstance(v, bool):
                    return BOOL_T
                if isinstance(v, int):
                    return _int_literal_ty(v)
                return STRING_T
            case RecordLit(fields):
                return TRecord(tuple((l, self.operand_ty(x)) for l, x in fields))
        return None

    def value(self, a, env):
        return self.atom(a, env, self.operand_ty(a))

    def rhs(self, e, env: AEnv, info: dict):
        match e:
            case Var() | Const() | RecordLit() | Nil() | NoneE():
                return self.value(e, env)
            case Proj(var, label):
                return env.take(var)[label]
            case MapGet(var, key):
                m = env.take(var)
                v = m.get(self.value(key, env))
                return core.NONE if v is None else core.Some(v)
            case BinOp(op, left, right):
                a = self.value(left, env)
                b = self.value(right, env)
                if op == "+":
                    try:
                        return add_values(a, b)
                    except MichelsonFailure as f:
                        raise AlbertFailure(f.value) from None
                return Bool(core.compare_value(a, b) >= 0)
            case Ctor(name, arg):
                v = self.value(arg, env)
                return core.Some(v) if name == "Some" else Variant(name, v)
            case Call(_, arg):
                return self.call(info["callee"], self.value(arg, env))
            case Amount():
                return core.Mutez(self.amount)
            case Update(m, k, v):
                mv = self.value(m, env)
                kv = self.value(k, env)
                vv = self.value(v, env)
                return mv.update(kv, vv.value if isinstance(vv, core.Some) else None)
            case AssertSome(arg):
                opt = self.value(arg, env)["opt"]
                if isinstance(opt, core.NoneV):
                    raise AlbertFailure(core.UNIT)
                return Record((("res", opt.value),))
        raise TypeError(e)

    def stmt(self, t: TStmt, env: AEnv):
        s = t.stmt
        match s:
            case Assign(PTuple((a, b)), Dup(var)):
                v = env.take(var)
                env.bind(a, v)
                env.bind(b, v)
            case Assign(lhs, rhs):
                v = self.rhs(rhs, env, t.info)
                match lhs:
                    case PVar(name):
                        env.bind(name, v)
                    case PRecord(fields):
                        for label, x in fields:
                            env.bind(x, v[label])
            case DropS(var):
                env.take(var)
            case FailWith(arg):
                raise AlbertFailure(self.value(arg, env))
            case CallS(_, arg):
                out = self.call(t.info["callee"], self.value(arg, env))
                for label, v in out.fields:
                    env.bind(label, v)
            case Match(var):
                v = env.take(var)
                match v:
                    case Bool(b):
                        ctor, payload = ("True" if b else "False"), core.UNIT
                    case core.Some(p):
                        ctor, payload = "Some", p
                    case core.NoneV():
                        ctor, payload = "None", core.UNIT
                    case core.Left(p):
                        ctor, payload = "Left", p
                    case core.Right(p):
                        ctor, payload = "Right", p
                    case Variant(c, p):
                        ctor, payload = c, p
                arm, body = t.info["arms"][ctor]
                env.bind(arm.binder, payload)
                self.body(body, env)


def eval_albert(c, fun_name: str, arg: Record, amount: int = 0, reads: dict | None = None):
    """Evaluate function ``fun_name`` on record ``arg``.

    Returns the produced record, or ``Failed(payload)``.  ``c`` may be a
    parsed or an already type-checked contract.  Pass a dict as ``reads`` to
    collect the per-binding read counts.
    """
    typed = c if isinstance(c, TypedAlbert) else typecheck_albert(c)
    tf = typed.fun(fun_name)
    if not albert_value_has_type(arg, tf.consumed):
        raise TypeError(f"argument does not have type {tf.consumed}")
    ev = _Evaluator(typed, amount, reads if reads is not None else {})
    try:
        return ev.call(tf, arg)
    except AlbertFailure as f:
        return Failed(f.value)


def albert_value_has_type(v, ty) -> bool:
    match ty:
        case TRecord(fields):
            return (isinstance(v, Record) and tuple(l for l, _ in v.fields) == ty.labels
                    and all(albert_value_has_type(x, t) for (_, x), (_, t) in zip(v.fields, fields)))
        case TVariant(ctors):
            return (isinstance(v, Variant) and v.ctor in dict(ctors)
                    and albert_value_has_type(v.payload, dict(ctors)[v.ctor]))
        case TPair(l, r):
            return isinstance(v, core.Pair) and albert_value_has_type(v.left, l) and albert_value_has_type(v.right, r)
        case TOr(l, r):
            if isinstance(v, core.Left):
                return albert_value_has_type(v.value, l)
            return isinstance(v, core.Right) and albert_value_has_type(v.value, r)
        case TOption(e):
            return isinstance(v, core.NoneV) or (isinstance(v, core.Some) and albert_value_has_type(v.value, e))
        case TList(e):
            return isinstance(v, core.List) and all(albert_value_has_type(x, e) for x in v.items)
        case TMap(k, e):
            return isinstance(v, core.Map) and all(
                albert_value_has_type(a, k) and albert_value_has_type(b, e) for a, b in v.entries)
    return core.value_has_type(v, ty)


# ---------------------------------------------------------------------------
# Value literals (used for CLI arguments)


class _ValueParser(_Parser):
    def value(self, ty):
        t = self.tok
        match ty:
            case TRecord():
                self.expect("{")
                got = {}
                while not self.accept("}"):
                    label = self.ident()
                    if ty.field_ty(label) is None or label in got:
                        self.error(f"unexpected field {label!r}")
                    self.expect("=")
                    got[label] = self.value(ty.field_ty(label))
                    if not self.accept(";") and not self.at("}"):
                        self.error("expected ';' or '}'")
                if set(got) != set(ty.labels):
                    self.error(f"record must have fields {list(ty.labels)}")
                return Record(tuple(got.items()))
            case TVariant(ctors):
                name = self.ident()
                if name not in dict(ctors):
                    self.error(f"unknown constructor {name}")
                return Variant(name, self.value_arg(dict(ctors)[name]))
            case TBool():
                if self.accept("True"):
                    return core.TRUE
                if self.accept("False"):
                    return core.FALSE
            case core.TUnit():
                if self.accept("Unit"):
                    return core.UNIT
            case core.TNat() | core.TInt() | core.TMutez():
                neg = self.accept("-")
                if self.tok.kind == "int":
                    n = int(self.next().text) * (-1 if neg else 1)
                    try:
                        return const_value(Const(n), ty)
                    except AlbertTypeError as e:
                        raise AlbertSyntaxError(str(e), t.line, t.col) from None
            case core.TString():
                if self.tok.kind == "string":
                    return core.Str(_unescape(self.next().text))
            case TOption(e):
                if self.accept("None"):
                    return core.NONE
                if self.accept("Some"):
                    return core.Some(self.value_arg(e))
            case TOr(l, r):
                if self.accept("Left"):
                    return core.Left(self.value_arg(l))
                if self.accept("Right"):
                    return core.Right(self.value_arg(r))
            case TPair(l, r):
                if self.accept("Pair"):
                    return core.Pair(self.value_arg(l), self.value_arg(r))
            case TList(e):
                self.expect("{")
                items = []
                while not self.accept("}"):
                    items.append(self.value(e))
                    if not self.accept(";") and not self.at("}"):
                        self.error("expected ';' or '}'")
                return core.List(tuple(items))
            case TMap(k, v):
                self.expect("{")
                entries = []
                while not self.accept("}"):
                    self.expect("Elt")
                    entries.append((self.value_arg(k), self.value_arg(v)))
                    if not self.accept(";") and not self.at("}"):
                        self.error("expected ';' or '}'")
                try:
                    return core.Map(tuple(entries))
                except ValueError as e:
                    raise AlbertSyntaxError(str(e), t.line, t.col) from None
        self.error(f"expected a value of type {ty}")

    def value_arg(self, ty):
        if self.accept("("):
            v = self.value(ty)
            self.expect(")")
            return v
        return self.value(ty)


def parse_albert_value(text: str, ty) -> object:
    """Parse a value literal of the resolved Albert type ``ty``."""
    p = _ValueParser(text)
    v = p.value_arg(ty)
    if p.tok.kind != "eof":
        p.error("unexpected trailing input")
    return v


def format_albert_value(v) -> str:
    """Print a value in the syntax read by :func:`parse_albert_value`."""
    match v:
        case Record(fields):
            return "{ " + " ; ".join(f"{l} = {format_albert_value(x)}" for l, x in fields) + " }"
        case Variant(c, p):
            return f"{c} {_arg(p)}"
        case core.Pair(a, b):
            return f"Pair {_arg(a)} {_arg(b)}"
        case core.Some(a):
            return f"Some {_arg(a)}"
        case core.Left(a):
            return f"Left {_arg(a)}"
        case core.Right(a):
            return f"Right {_arg(a)}"
        case core.List(items):
            return "{ " + " ; ".join(format_albert_value(x) for x in items) + " }" if items else "{}"
        case core.Map(entries):
            if not entries:
                return "{}"
            return "{ " + " ; ".join(f"Elt {_arg(a)} {_arg(b)}" for a, b in entries) + " }"
    from .syntax import print_value
    return print_value(v)


def _arg(v) -> str:
    s = format_albert_value(v)
    return f"({s})" if isinstance(v, (Variant, core.Pair, core.Some, core.Left, core.Right)) else s
