import random

import pytest
from hypothesis import given, strategies as st

from michelkit import core
from michelkit.core import (
    INT_T, MUTEZ_T, NAT_T, STRING_T, Env, Failed, Int, Mutez, Nat, OutOfFuel, Str,
    Success, TMap, TOption, UNIT,
)
from michelkit.interp import ContractOutput, eval_seq, run_contract
from michelkit.syntax import parse_code, parse_value
from michelkit.typecheck import typecheck_seq
from michelkit.verify import _gen_mutez, gen_stack, gen_stack_ty, gen_typed_program

VOTE_STORAGE = '{Elt "Agda" 0 ; Elt "Coq" 0 ; Elt "Isabelle" 0}'
VOTES_T = TMap(STRING_T, INT_T)


def run(code, inp_ty, stack, fuel=1000, amount=0):
    return eval_seq(typecheck_seq(parse_code(code), inp_ty), fuel, stack, Env(amount))


def storage():
    return parse_value(VOTE_STORAGE, VOTES_T)


def test_vote_for_coq_with_5_tez(vote_typed):
    res = run_contract(vote_typed, Str("Coq"), storage(), Env(5_000_000))
    assert res == ContractOutput((), storage().update(Str("Coq"), Int(1)))


def test_vote_with_4_tez_fails(vote_typed):
    assert run_contract(vote_typed, Str("Coq"), storage(), Env(4_000_000)) == Failed(UNIT)


def test_vote_for_unknown_candidate_fails(vote_typed):
    assert run_contract(vote_typed, Str("OCaml"), storage(), Env(5_000_000)) == Failed(UNIT)


def test_vote_can_be_repeated(vote_typed):
    s = storage()
    for _ in range(3):
        s = run_contract(vote_typed, Str("Agda"), s, Env(10_000_000)).storage
    assert s.get(Str("Agda")) == Int(3)


def test_fuel_accounting_on_vote(vote_typed):
    # 24 nodes, of which the two UNIT;FAILWITH blocks are skipped on success
    ok = (core.Pair(Str("Coq"), storage()),)
    assert isinstance(eval_seq(vote_typed.code, 20, ok, Env(5_000_000)), Success)
    assert isinstance(eval_seq(vote_typed.code, 19, ok, Env(5_000_000)), OutOfFuel)
    # AMOUNT PUSH COMPARE GT IF UNIT FAILWITH
    assert eval_seq(vote_typed.code, 7, ok, Env(4_000_000)) == Failed(UNIT)
    assert isinstance(eval_seq(vote_typed.code, 6, ok, Env(4_000_000)), OutOfFuel)
    assert isinstance(eval_seq(vote_typed.code, 3, ok, Env(5_000_000)), OutOfFuel)


def test_loop_charges_each_condition_test():
    # PUSH, LOOP (first test), PUSH in body, LOOP (second test)
    code = "{ PUSH bool True ; LOOP { PUSH bool False } }"
    assert run(code, (), (), fuel=4) == Success(())
    assert run(code, (), (), fuel=3) == OutOfFuel()


def test_countdown_loop():
    code = "{ PUSH bool True ; LOOP { PUSH int 1 ; SWAP ; SUB ; DUP ; GT } }"
    assert run(code, (INT_T,), (Int(5),)) == Success((Int(0),))


def test_seq_nodes_are_free():
    assert run("{ { { UNIT } } }", (), (), fuel=1) == Success((UNIT,))


def test_mutez_overflow_and_underflow_fail():
    top = (Mutez(core.MUTEZ_MAX), Mutez(1))
    assert run("{ ADD }", (MUTEZ_T, MUTEZ_T), top) == Failed(UNIT)
    assert run("{ SUB }", (MUTEZ_T, MUTEZ_T), (Mutez(0), Mutez(1))) == Failed(UNIT)
    assert run("{ SUB }", (MUTEZ_T, MUTEZ_T), (Mutez(5), Mutez(1))) == Success((Mutez(4),))


def test_arithmetic():
    assert run("{ SUB }", (NAT_T, NAT_T), (Nat(1), Nat(3))) == Success((Int(-2),))
    assert run("{ ADD }", (INT_T, NAT_T), (Int(-5), Nat(3))) == Success((Int(-2),))
    assert run("{ COMPARE }", (STRING_T, STRING_T), (Str("a"), Str("b"))) == Success((Int(-1),))


def test_map_instructions():
    m = core.Map.of({Str("a"): Nat(1)})
    mt = TMap(STRING_T, NAT_T)
    assert run("{ GET }", (STRING_T, mt), (Str("a"), m)) == Success((core.Some(Nat(1)),))
    assert run("{ GET }", (STRING_T, mt), (Str("b"), m)) == Success((core.NONE,))
    assert run("{ MEM }", (STRING_T, mt), (Str("b"), m)) == Success((core.FALSE,))
    assert run("{ UPDATE }", (STRING_T, TOption(NAT_T), mt), (Str("a"), core.NONE, m)) == \
        Success((core.Map(),))


def test_failwith_payload():
    assert run("{ PUSH string \"no\" ; FAILWITH }", (), ()) == Failed(Str("no"))


def test_amount_reads_environment():
    assert run("{ AMOUNT }", (), (), amount=7) == Success((Mutez(7),))


def test_run_contract_rejects_ill_typed_input(vote_typed):
    with pytest.raises(TypeError):
        run_contract(vote_typed, Nat(1), storage())
    with pytest.raises(TypeError):
        run_contract(vote_typed, Str("Coq"), core.Map.of({Str("Coq"): Nat(0)}))


@given(st.integers(0, 10**6))
def test_results_are_well_typed(seed):
    rng = random.Random(seed)
    inp = gen_stack_ty(rng)
    code, out = gen_typed_program(rng, 6, inp)
    typed = typecheck_seq(code, inp)
    assert typed.out == out
    res = eval_seq(typed, 10_000, gen_stack(rng, inp), Env(_gen_mutez(rng)))
    if isinstance(res, Success):
        assert core.stack_has_type(res.stack, out)
    else:
        assert isinstance(res, Failed)  # generated loops always terminate


@given(st.integers(0, 200), st.integers(0, 60))
def test_more_fuel_never_changes_a_result(seed, fuel):
    rng = random.Random(seed)
    inp = gen_stack_ty(rng)
    code, _ = gen_typed_program(rng, 4, inp)
    typed = typecheck_seq(code, inp)
    stack = gen_stack(rng, inp)
    r1 = eval_seq(typed, fuel, stack)
    r2 = eval_seq(typed, fuel + 50, stack)
    if not isinstance(r1, OutOfFuel):
        assert r1 == r2
