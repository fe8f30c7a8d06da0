"""Michelson concrete syntax: untyped AST, parser, macro expansion, printer."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import core
from .core import (
    TBool, TInt, TList, TMap, TMutez, TNat, TOption, TOr, TPair,
    TString, TUnit, Ty,
)


class MichelsonSyntaxError(Exception):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + message)


class LiteralTypeError(Exception):
    pass


# ---------------------------------------------------------------------------
# Literals


@dataclass(frozen=True)
class LInt:
    value: int


@dataclass(frozen=True)
class LStr:
    value: str


@dataclass(frozen=True)
class LUnit:
    pass


@dataclass(frozen=True)
class LBool:
    value: bool


@dataclass(frozen=True)
class LPair:
    left: "Literal"
    right: "Literal"


@dataclass(frozen=True)
class LSome:
    value: "Literal"


@dataclass(frozen=True)
class LNone:
    pass


@dataclass(frozen=True)
class LLeft:
    value: "Literal"


@dataclass(frozen=True)
class LRight:
    value: "Literal"


@dataclass(frozen=True)
class LSeq:
    items: tuple = ()


@dataclass(frozen=True)
class LElts:
    entries: tuple = ()  # ((key literal, value literal), ...)


Literal = LInt | LStr | LUnit | LBool | LPair | LSome | LNone | LLeft | LRight | LSeq | LElts


# ---------------------------------------------------------------------------
# Instructions
#
# Every node carries an optional source location that is ignored by equality.

_loc = dict(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Prim:
    """Argument-less instruction such as ``SWAP`` or ``ADD``."""

    name: str
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Push:
    ty: Ty
    lit: Literal
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Drop:
    n: int = 1
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Dig:
    n: int
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Dug:
    n: int
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Dip:
    n: int
    body: tuple
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class If:
    then: tuple
    else_: tuple
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class IfNone:
    none: tuple
    some: tuple
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class IfLeft:
    left: tuple
    right: tuple
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Loop:
    body: tuple
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Seq:
    body: tuple
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class TyArg:
    """Instruction taking type arguments: NONE, LEFT, RIGHT, NIL, EMPTY_MAP."""

    name: str
    tys: tuple
    loc: tuple | None = field(**_loc)


@dataclass(frozen=True)
class Macro:
    name: str
    loc: tuple | None = field(**_loc)


Instr = Prim | Push | Drop | Dig | Dug | Dip | If | IfNone | IfLeft | Loop | Seq | TyArg | Macro

PRIMS = frozenset("""
    DUP SWAP FAILWITH UNIT PAIR CAR CDR SOME CONS GET UPDATE MEM ADD SUB
    COMPARE EQ NEQ GT GE LT LE NOT AMOUNT
""".split())
TYARG_ARITY = {"NONE": 1, "LEFT": 1, "RIGHT": 1, "NIL": 1, "EMPTY_MAP": 2}
MACROS = frozenset({"FAIL", "ASSERT_SOME"})

# Shorthands used throughout the code base and the tests.
DUP, SWAP, FAILWITH, UNIT, PAIR = (Prim(n) for n in ("DUP", "SWAP", "FAILWITH", "UNIT", "PAIR"))
CAR, CDR, SOME, CONS = (Prim(n) for n in ("CAR", "CDR", "SOME", "CONS"))
GET, UPDATE, MEM, ADD, SUB = (Prim(n) for n in ("GET", "UPDATE", "MEM", "ADD", "SUB"))
COMPARE, EQ, NEQ, GT, GE, LT, LE = (Prim(n) for n in ("COMPARE", "EQ", "NEQ", "GT", "GE", "LT", "LE"))
NOT, AMOUNT = Prim("NOT"), Prim("AMOUNT")


@dataclass(frozen=True)
class ContractSrc:
    parameter_ty: Ty
    storage_ty: Ty
    code: tuple


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*|/\*.*?\*/)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<int>-?\d+)
  | (?P<annot>[%@:][A-Za-z0-9_.%@]*)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}();])
""", re.VERBOSE | re.DOTALL)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "b": "\b", '"': '"', "\\": "\\"}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise MichelsonSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment", "annot"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        if "\n" in chunk:
            line += chunk.count("\n")
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unescape(raw: str) -> str:
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), raw[1:-1])


def _escape(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


# ---------------------------------------------------------------------------
# Parser

_SIMPLE_TYPES = {
    "unit": core.UNIT_T, "bool": core.BOOL_T, "nat": core.NAT_T, "int": core.INT_T,
    "mutez": core.MUTEZ_T, "string": core.STRING_T, "operation": core.OPERATION_T,
}
_TYPE_CTORS = {"pair": (2, TPair), "or": (2, TOr), "option": (1, TOption),
               "list": (1, TList), "map": (2, TMap)}


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise MichelsonSyntaxError(f"{msg} (found {found!r})", tok.line, tok.col)

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("punct", "word"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if self.tok.text != text:
            self.error(f"expected {text!r}")
        return self.next()

    def expect_eof(self):
        if self.tok.kind != "eof":
            self.error("unexpected trailing input")

    # types

    def parse_ty(self) -> Ty:
        t = self.tok
        if self.accept("("):
            ty = self.parse_ty()
            self.expect(")")
            return ty
        if t.kind != "word":
            self.error("expected a type")
        if t.text in _SIMPLE_TYPES:
            self.next()
            return _SIMPLE_TYPES[t.text]
        if t.text in _TYPE_CTORS:
            self.next()
            arity, ctor = _TYPE_CTORS[t.text]
            args = [self.parse_ty() for _ in range(arity)]
            try:
                return ctor(*args)
            except ValueError as e:
                self.error(str(e), t)
        self.error("unknown type")

    # literals

    def parse_literal(self) -> Literal:
        t = self.tok
        if t.kind == "int":
            self.next()
            return LInt(int(t.text))
        if t.kind == "string":
            self.next()
            return LStr(_unescape(t.text))
        if self.accept("("):
            lit = self.parse_literal_app()
            self.expect(")")
            return lit
        if self.accept("{"):
            return self.parse_literal_block()
        if t.kind == "word" and t.text in ("Unit", "True", "False", "None"):
            self.next()
            return {"Unit": LUnit(), "True": LBool(True), "False": LBool(False), "None": LNone()}[t.text]
        if t.kind == "word" and t.text in ("Pair", "Some", "Left", "Right", "Elt"):
            self.error(f"constructor {t.text} needs parentheses here")
        self.error("expected a literal")

    def parse_literal_app(self) -> Literal:
        t = self.tok
        if t.kind == "word" and t.text == "Pair":
            self.next()
            return LPair(self.parse_literal(), self.parse_literal())
        if t.kind == "word" and t.text in ("Some", "Left", "Right"):
            self.next()
            return {"Some": LSome, "Left": LLeft, "Right": LRight}[t.text](self.parse_literal())
        return self.parse_literal()

    def parse_literal_block(self) -> Literal:
        # "{" already consumed
        if self.accept("}"):
            return LSeq(())
        if self.tok.text == "Elt":
            entries = []
            while True:
                self.expect("Elt")
                k = self.parse_literal()
                v = self.parse_literal()
                entries.append((k, v))
                if self.accept(";"):
                    if self.accept("}"):
                        break
                    continue
                self.expect("}")
                break
            return LElts(tuple(entries))
        items = []
        while True:
            items.append(self.parse_literal_app())
            if self.accept(";"):
                if self.accept("}"):
                    break
                continue
            self.expect("}")
            break
        return LSeq(tuple(items))

    # instructions

    def parse_block(self) -> tuple:
        self.expect("{")
        instrs = []
        while not self.accept("}"):
            instrs.append(self.parse_instr())
            if self.accept(";"):
                continue
            if self.tok.text != "}":
                self.error("expected ';' or '}'")
        return tuple(instrs)

    def parse_count(self, default: int | None) -> int:
        if self.tok.kind == "int":
            n = int(self.next().text)
            if n < 0:
                self.error("count must be non-negative")
            return n
        if default is None:
            self.error("expected a count")
        return default

    def parse_instr(self) -> Instr:
        t = self.tok
        loc = (t.line, t.col)
        if t.text == "{":
            return Seq(self.parse_block(), loc=loc)
        if t.kind != "word":
            self.error("expected an instruction")
        name = self.next().text
        if name in PRIMS:
            return Prim(name, loc=loc)
        if name in MACROS:
            return Macro(name, loc=loc)
        if name in TYARG_ARITY:
            return TyArg(name, tuple(self.parse_ty() for _ in range(TYARG_ARITY[name])), loc=loc)
        match name:
            case "PUSH":
                ty = self.parse_ty()
                return Push(ty, self.parse_literal(), loc=loc)
            case "DROP":
                return Drop(self.parse_count(1), loc=loc)
            case "DIG":
                return Dig(self.parse_count(None), loc=loc)
            case "DUG":
                return Dug(self.parse_count(None), loc=loc)
            case "DIP":
                n = self.parse_count(1)
                return Dip(n, self.parse_block(), loc=loc)
            case "IF":
                return If(self.parse_block(), self.parse_block(), loc=loc)
            case "IF_NONE":
                return IfNone(self.parse_block(), self.parse_block(), loc=loc)
            case "IF_LEFT":
                return IfLeft(self.parse_block(), self.parse_block(), loc=loc)
            case "LOOP":
                return Loop(self.parse_block(), loc=loc)
        self.error("unknown instruction", t)

    def parse_contract(self) -> ContractSrc:
        fields = {}
        while self.tok.kind != "eof":
            t = self.tok
            if t.text not in ("parameter", "storage", "code"):
                self.error("expected 'parameter', 'storage' or 'code'")
            if t.text in fields:
                self.error(f"duplicate field {t.text!r}")
            self.next()
            fields[t.text] = self.parse_block() if t.text == "code" else self.parse_ty()
            if not self.accept(";") and self.tok.kind != "eof":
                self.error("expected ';'")
        for name in ("parameter", "storage", "code"):
            if name not in fields:
                self.error(f"missing field {name!r}")
        return ContractSrc(fields["parameter"], fields["storage"], expand_macros(fields["code"]))


def parse_contract(text: str) -> ContractSrc:
    """Parse a contract; the returned code has all macros expanded."""
    return Parser(text).parse_contract()


def parse_code(text: str) -> tuple:
    """Parse a bare ``{ ... }`` instruction block (macros expanded)."""
    p = Parser(text)
    code = p.parse_block()
    p.expect_eof()
    return expand_macros(code)


def parse_ty(text: str) -> Ty:
    p = Parser(text)
    ty = p.parse_ty()
    p.expect_eof()
    return ty


def parse_literal(text: str) -> Literal:
    p = Parser(text)
    lit = p.parse_literal_app()
    p.expect_eof()
    return lit


def parse_value(text: str, ty: Ty) -> core.Value:
    return literal_to_value(parse_literal(text), ty)


# ---------------------------------------------------------------------------
# Macros


def expand_macros(code) -> tuple:
    out = []
    for ins in code:
        match ins:
            case Macro("FAIL"):
                out += [UNIT, FAILWITH]
            case Macro("ASSERT_SOME"):
                out.append(IfNone((UNIT, FAILWITH), ()))
            case Macro(name):
                raise MichelsonSyntaxError(f"unknown macro {name}")
            case _:
                out.append(map_bodies(ins, expand_macros))
    return tuple(out)


def bodies(ins: Instr) -> tuple:
    """The nested instruction sequences of ``ins``."""
    match ins:
        case Dip(_, b) | Loop(b) | Seq(b):
            return (b,)
        case If(a, b) | IfNone(a, b) | IfLeft(a, b):
            return (a, b)
    return ()


def map_bodies(ins: Instr, f) -> Instr:
    """Rebuild ``ins`` with ``f`` applied to each nested sequence."""
    match ins:
        case Dip(n, b):
            return Dip(n, f(b), loc=ins.loc)
        case Loop(b):
            return Loop(f(b), loc=ins.loc)
        case Seq(b):
            return Seq(f(b), loc=ins.loc)
        case If(a, b):
            return If(f(a), f(b), loc=ins.loc)
        case IfNone(a, b):
            return IfNone(f(a), f(b), loc=ins.loc)
        case IfLeft(a, b):
            return IfLeft(f(a), f(b), loc=ins.loc)
    return ins


def node_count(code) -> int:
    return sum(1 + sum(node_count(b) for b in bodies(i)) for i in code)


# ---------------------------------------------------------------------------
# Literals <-> values


def literal_to_value(lit: Literal, ty: Ty) -> core.Value:
    def bad():
        raise LiteralTypeError(f"literal {print_literal(lit)} does not have type {ty}")

    match ty, lit:
        case TUnit(), LUnit():
            return core.UNIT
        case TBool(), LBool(b):
            return core.Bool(b)
        case TNat(), LInt(n):
            if n < 0:
                bad()
            return core.Nat(n)
        case TInt(), LInt(n):
            return core.Int(n)
        case TMutez(), LInt(n):
            if not 0 <= n <= core.MUTEZ_MAX:
                bad()
            return core.Mutez(n)
        case TString(), LStr(s):
            return core.Str(s)
        case TPair(l, r), LPair(a, b):
            return core.Pair(literal_to_value(a, l), literal_to_value(b, r))
        case TOr(l, _), LLeft(a):
            return core.Left(literal_to_value(a, l))
        case TOr(_, r), LRight(a):
            return core.Right(literal_to_value(a, r))
        case TOption(_), LNone():
            return core.NONE
        case TOption(e), LSome(a):
            return core.Some(literal_to_value(a, e))
        case TList(e), LSeq(items):
            return core.List(tuple(literal_to_value(x, e) for x in items))
        case TMap(_, _), LSeq(()):
            return core.Map()
        case TMap(k, v), LElts(entries):
            try:
                return core.Map(tuple((literal_to_value(a, k), literal_to_value(b, v))
                                      for a, b in entries))
            except ValueError as e:
                raise LiteralTypeError(str(e)) from None
    bad()


def value_to_literal(v: core.Value) -> Literal:
    match v:
        case core.Unit():
            return LUnit()
        case core.Bool(b):
            return LBool(b)
        case core.Nat(n) | core.Int(n) | core.Mutez(n):
            return LInt(n)
        case core.Str(s):
            return LStr(s)
        case core.Pair(a, b):
            return LPair(value_to_literal(a), value_to_literal(b))
        case core.Left(a):
            return LLeft(value_to_literal(a))
        case core.Right(a):
            return LRight(value_to_literal(a))
        case core.Some(a):
            return LSome(value_to_literal(a))
        case core.NoneV():
            return LNone()
        case core.List(items):
            return LSeq(tuple(value_to_literal(x) for x in items))
        case core.Map(entries):
            if not entries:
                return LSeq(())
            return LElts(tuple((value_to_literal(a), value_to_literal(b)) for a, b in entries))
    raise TypeError(f"value {v!r} has no literal form")


# ---------------------------------------------------------------------------
# Printer


def print_literal(lit: Literal, nested: bool = False) -> str:
    def wrap(s):
        return f"({s})" if nested else s

    match lit:
        case LInt(n):
            return str(n)
        case LStr(s):
            return _escape(s)
        case LUnit():
            return "Unit"
        case LBool(b):
            return "True" if b else "False"
        case LNone():
            return "None"
        case LPair(a, b):
            return wrap(f"Pair {print_literal(a, True)} {print_literal(b, True)}")
        case LSome(a):
            return wrap(f"Some {print_literal(a, True)}")
        case LLeft(a):
            return wrap(f"Left {print_literal(a, True)}")
        case LRight(a):
            return wrap(f"Right {print_literal(a, True)}")
        case LSeq(items):
            if not items:
                return "{}"
            return "{ " + " ; ".join(print_literal(x) for x in items) + " }"
        case LElts(entries):
            inner = " ; ".join(f"Elt {print_literal(a, True)} {print_literal(b, True)}"
                               for a, b in entries)
            return "{ " + inner + " }"
    raise TypeError(lit)


def print_value(v: core.Value) -> str:
    return print_literal(value_to_literal(v))


def _ty_arg(t: Ty) -> str:
    s = str(t)
    return f"({s})" if " " in s else s


def print_instr(ins: Instr, indent: int = 0) -> str:
    match ins:
        case Prim(name):
            return name
        case Macro(name):
            return name
        case Push(ty, lit):
            return f"PUSH {_ty_arg(ty)} {print_literal(lit, True)}"
        case Drop(n):
            return "DROP" if n == 1 else f"DROP {n}"
        case Dig(n):
            return f"DIG {n}"
        case Dug(n):
            return f"DUG {n}"
        case TyArg(name, tys):
            return " ".join([name] + [_ty_arg(t) for t in tys])
        case Dip(n, b):
            head = "DIP" if n == 1 else f"DIP {n}"
            return f"{head} {print_block(b, indent)}"
        case Loop(b):
            return f"LOOP {print_block(b, indent)}"
        case Seq(b):
            return print_block(b, indent)
        case If(a, b):
            return f"IF {print_block(a, indent)} {print_block(b, indent)}"
        case IfNone(a, b):
            return f"IF_NONE {print_block(a, indent)} {print_block(b, indent)}"
        case IfLeft(a, b):
            return f"IF_LEFT {print_block(a, indent)} {print_block(b, indent)}"
    raise TypeError(ins)


def print_block(code, indent: int = 0) -> str:
    if not code:
        return "{ }"
    if all(not bodies(i) for i in code) and len(code) <= 6:
        return "{ " + " ; ".join(print_instr(i) for i in code) + " }"
    pad = "  " * (indent + 1)
    lines = [pad + print_instr(i, indent + 1) for i in code]
    return "{\n" + " ;\n".join(lines) + "\n" + "  " * indent + "}"


def print_contract(c: ContractSrc) -> str:
    return (f"parameter {c.parameter_ty};\n"
            f"storage {c.storage_ty};\n"
            f"code {print_block(c.code)}\n")
