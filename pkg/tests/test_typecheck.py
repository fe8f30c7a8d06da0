import pytest

from michelkit.core import (
    BOOL_T, INT_T, MUTEZ_T, NAT_T, OPERATION_T, STRING_T, UNIT_T, TList, TMap, TOption, TOr,
    TPair,
)
from michelkit.syntax import ContractSrc, parse_code
from michelkit.typecheck import MichelsonTypeError, typecheck_contract, typecheck_seq


def out(code, inp):
    return typecheck_seq(parse_code(code), inp).out


def test_vote_typechecks(vote_typed):
    assert vote_typed.code.out == (TPair(TList(OPERATION_T), TMap(STRING_T, INT_T)),)
    # stack after `DUP; DIP { CDR; DUP }` from the comment in the contract
    sixth = vote_typed.code.instrs[6]
    storage = TMap(STRING_T, INT_T)
    assert sixth.out == (TPair(STRING_T, storage), storage, storage)


@pytest.mark.parametrize("a,b,res", [
    (NAT_T, NAT_T, NAT_T), (INT_T, INT_T, INT_T), (NAT_T, INT_T, INT_T),
    (INT_T, NAT_T, INT_T), (MUTEZ_T, MUTEZ_T, MUTEZ_T),
])
def test_add_overloads(a, b, res):
    assert typecheck_seq(parse_code("{ ADD }"), (a, b)).out == (res,)


@pytest.mark.parametrize("a,b,res", [
    (NAT_T, NAT_T, INT_T), (INT_T, INT_T, INT_T), (NAT_T, INT_T, INT_T),
    (INT_T, NAT_T, INT_T), (MUTEZ_T, MUTEZ_T, MUTEZ_T),
])
def test_sub_overloads(a, b, res):
    assert out("{ SUB }", (a, b)) == (res,)


@pytest.mark.parametrize("a,b", [(MUTEZ_T, NAT_T), (STRING_T, STRING_T), (BOOL_T, INT_T)])
def test_arithmetic_rejects_other_operands(a, b):
    for op in ("ADD", "SUB"):
        with pytest.raises(MichelsonTypeError, match=f"no {op} overload"):
            out(f"{{ {op} }}", (a, b))


def test_failing_branch_unifies_with_anything():
    assert out("{ IF { UNIT ; FAILWITH } { PUSH nat 1 } }", (BOOL_T,)) == (NAT_T,)
    assert out("{ IF { UNIT ; FAILWITH } { UNIT ; FAILWITH } }", (BOOL_T,)) is None


def test_code_after_failwith_is_rejected():
    with pytest.raises(MichelsonTypeError, match="unreachable"):
        out("{ FAILWITH ; DUP }", (NAT_T,))


def test_branch_mismatch():
    with pytest.raises(MichelsonTypeError, match="branches disagree"):
        out("{ IF { PUSH nat 1 } { PUSH int 1 } }", (BOOL_T,))


def test_loop_body_must_restore_stack():
    assert out("{ LOOP { PUSH bool False } }", (BOOL_T, NAT_T)) == (NAT_T,)
    with pytest.raises(MichelsonTypeError, match="LOOP body"):
        out("{ LOOP { DROP ; PUSH bool False } }", (BOOL_T, NAT_T))


def test_underflow_and_error_location():
    with pytest.raises(MichelsonTypeError, match="underflow") as e:
        typecheck_seq(parse_code("{ DROP ;\n  SWAP }"), (NAT_T, NAT_T))
    assert str(e.value).startswith("2:3:")
    with pytest.raises(MichelsonTypeError, match="DIG 3"):
        out("{ DIG 3 }", (NAT_T, NAT_T))


def test_option_or_and_map_instructions():
    assert out("{ IF_NONE { PUSH nat 0 } { } }", (TOption(NAT_T),)) == (NAT_T,)
    assert out("{ IF_LEFT { DROP ; UNIT } { DROP ; UNIT } }", (TOr(NAT_T, INT_T),)) == (UNIT_T,)
    assert out("{ LEFT int }", (NAT_T,)) == (TOr(NAT_T, INT_T),)
    assert out("{ RIGHT int }", (NAT_T,)) == (TOr(INT_T, NAT_T),)
    m = TMap(STRING_T, NAT_T)
    assert out("{ GET }", (STRING_T, m)) == (TOption(NAT_T),)
    assert out("{ MEM }", (STRING_T, m)) == (BOOL_T,)
    assert out("{ UPDATE }", (STRING_T, TOption(NAT_T), m)) == (m,)
    with pytest.raises(MichelsonTypeError):
        out("{ GET }", (NAT_T, m))
    with pytest.raises(MichelsonTypeError):
        out("{ EMPTY_MAP (pair nat nat) nat }", ())


def test_compare_requires_same_comparable_type():
    assert out("{ COMPARE ; GT }", (MUTEZ_T, MUTEZ_T)) == (BOOL_T,)
    with pytest.raises(MichelsonTypeError):
        out("{ COMPARE }", (NAT_T, INT_T))
    with pytest.raises(MichelsonTypeError):
        out("{ COMPARE }", (UNIT_T, UNIT_T))


def test_contract_output_type_is_checked():
    ok = ContractSrc(UNIT_T, UNIT_T, parse_code("{ CDR ; NIL operation ; PAIR }"))
    typecheck_contract(ok)
    bad = ContractSrc(UNIT_T, UNIT_T, parse_code("{ CDR ; NIL operation ; PAIR ; DUP }"))
    with pytest.raises(MichelsonTypeError, match="contract must end"):
        typecheck_contract(bad)
    always_fails = ContractSrc(UNIT_T, UNIT_T, parse_code("{ FAILWITH }"))
    assert typecheck_contract(always_fails).code.out is None
