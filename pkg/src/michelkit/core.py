"""Michelson types, runtime values, stacks and results.

Stacks are tuples with the top of the stack at index 0.  All values are
frozen dataclasses, so they hash, compare structurally and can be shared.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

MUTEZ_MAX = 2**63 - 1


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class TUnit:
    def __str__(self) -> str:
        return "unit"


@dataclass(frozen=True)
class TBool:
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class TNat:
    def __str__(self) -> str:
        return "nat"


@dataclass(frozen=True)
class TInt:
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class TMutez:
    def __str__(self) -> str:
        return "mutez"


@dataclass(frozen=True)
class TString:
    def __str__(self) -> str:
        return "string"


@dataclass(frozen=True)
class TOperation:
    def __str__(self) -> str:
        return "operation"


def _wrap(t: "Ty") -> str:
    s = str(t)
    return f"({s})" if " " in s else s


@dataclass(frozen=True)
class TPair:
    left: Ty
    right: Ty

    def __str__(self) -> str:
        return f"pair {_wrap(self.left)} {_wrap(self.right)}"


@dataclass(frozen=True)
class TOr:
    left: Ty
    right: Ty

    def __str__(self) -> str:
        return f"or {_wrap(self.left)} {_wrap(self.right)}"


@dataclass(frozen=True)
class TOption:
    elem: Ty

    def __str__(self) -> str:
        return f"option {_wrap(self.elem)}"


@dataclass(frozen=True)
class TList:
    elem: Ty

    def __str__(self) -> str:
        return f"list {_wrap(self.elem)}"


@dataclass(frozen=True)
class TMap:
    key: Ty
    value: Ty

    def __post_init__(self):
        if not is_comparable(self.key):
            raise ValueError(f"map key type {self.key} is not comparable")

    def __str__(self) -> str:
        return f"map {_wrap(self.key)} {_wrap(self.value)}"


Ty = Union[TUnit, TBool, TNat, TInt, TMutez, TString, TOperation,
           TPair, TOr, TOption, TList, TMap]
StackTy = tuple  # tuple[Ty, ...], head = top

UNIT_T = TUnit()
BOOL_T = TBool()
NAT_T = TNat()
INT_T = TInt()
MUTEZ_T = TMutez()
STRING_T = TString()
OPERATION_T = TOperation()

COMPARABLE = (TNat, TInt, TMutez, TString, TBool)


def is_comparable(t: Ty) -> bool:
    return isinstance(t, COMPARABLE)


def format_stack_ty(st) -> str:
    if st is None:
        return "<failed>"
    return "[" + " : ".join(str(t) for t in st) + "]"


# ---------------------------------------------------------------------------
# Values


@dataclass(frozen=True)
class Unit:
    pass


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Nat:
    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"negative nat {self.value}")


@dataclass(frozen=True)
class Int:
    value: int


@dataclass(frozen=True)
class Mutez:
    value: int

    def __post_init__(self):
        if not 0 <= self.value <= MUTEZ_MAX:
            raise ValueError(f"mutez amount out of range: {self.value}")


@dataclass(frozen=True)
class Str:
    value: str


@dataclass(frozen=True)
class Operation:
    """Opaque operation; nothing in scope ever builds one."""

    tag: str = "op"


@dataclass(frozen=True)
class Pair:
    left: Value
    right: Value


@dataclass(frozen=True)
class Left:
    value: Value


@dataclass(frozen=True)
class Right:
    value: Value


@dataclass(frozen=True)
class Some:
    value: Value


@dataclass(frozen=True)
class NoneV:
    pass


@dataclass(frozen=True)
class List:
    items: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))


@dataclass(frozen=True)
class Map:
    """Finite map kept as key-sorted ``(key, value)`` entries.

    Construction sorts the entries, so two maps built from the same bindings
    in a different order are equal.  Duplicate keys are rejected.
    """

    entries: tuple = field(default=())

    def __post_init__(self):
        items = sorted(self.entries, key=_CompareKey)
        for (a, _), (b, _) in zip(items, items[1:]):
            if compare_value(a, b) == 0:
                raise ValueError(f"duplicate map key {a}")
        object.__setattr__(self, "entries", tuple(items))

    @classmethod
    def of(cls, mapping) -> Map:
        return cls(tuple(mapping.items()))

    def get(self, key: Value):
        for k, v in self.entries:
            if compare_value(k, key) == 0:
                return v
        return None

    def update(self, key: Value, value) -> Map:
        rest = tuple((k, v) for k, v in self.entries if compare_value(k, key) != 0)
        if value is None:
            return Map(rest)
        return Map(rest + ((key, value),))

    def __contains__(self, key) -> bool:
        return self.get(key) is not None

    def __len__(self) -> int:
        return len(self.entries)


Value = Union[Unit, Bool, Nat, Int, Mutez, Str, Operation, Pair, Left, Right,
              Some, NoneV, List, Map]
Stack = tuple  # tuple[Value, ...], head = top

UNIT = Unit()
NONE = NoneV()
TRUE = Bool(True)
FALSE = Bool(False)


def compare_value(a: Value, b: Value) -> int:
    """Three-way comparison of two values of the same comparable type."""
    if type(a) is not type(b) or not isinstance(a, (Nat, Int, Mutez, Str, Bool)):
        raise TypeError(f"cannot compare {a!r} with {b!r}")
    x, y = a.value, b.value
    return (x > y) - (x < y)


class _CompareKey:
    __slots__ = ("key",)

    def __init__(self, entry):
        self.key = entry[0]

    def __lt__(self, other: _CompareKey) -> bool:
        return compare_value(self.key, other.key) < 0


def value_has_type(v: Value, t: Ty) -> bool:
    match t:
        case TUnit():
            return isinstance(v, Unit)
        case TBool():
            return isinstance(v, Bool)
        case TNat():
            return isinstance(v, Nat)
        case TInt():
            return isinstance(v, Int)
        case TMutez():
            return isinstance(v, Mutez)
        case TString():
            return isinstance(v, Str)
        case TOperation():
            return isinstance(v, Operation)
        case TPair(l, r):
            return isinstance(v, Pair) and value_has_type(v.left, l) and value_has_type(v.right, r)
        case TOr(l, r):
            if isinstance(v, Left):
                return value_has_type(v.value, l)
            return isinstance(v, Right) and value_has_type(v.value, r)
        case TOption(e):
            if isinstance(v, NoneV):
                return True
            return isinstance(v, Some) and value_has_type(v.value, e)
        case TList(e):
            return isinstance(v, List) and all(value_has_type(x, e) for x in v.items)
        case TMap(k, e):
            return isinstance(v, Map) and all(
                value_has_type(a, k) and value_has_type(b, e) for a, b in v.entries)
    return False


def stack_has_type(stack: Stack, st: StackTy) -> bool:
    return len(stack) == len(st) and all(value_has_type(v, t) for v, t in zip(stack, st))


# ---------------------------------------------------------------------------
# Execution environment and results


@dataclass(frozen=True)
class Env:
    amount: int = 0

    def __post_init__(self):
        if not 0 <= self.amount <= MUTEZ_MAX:
            raise ValueError(f"amount out of mutez range: {self.amount}")


@dataclass(frozen=True)
class Success:
    stack: Stack


@dataclass(frozen=True)
class Failed:
    value: Value


@dataclass(frozen=True)
class OutOfFuel:
    pass


ExecResult = Union[Success, Failed, OutOfFuel]
