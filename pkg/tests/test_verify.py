import random

from hypothesis import given, strategies as st

from michelkit import core
from michelkit.core import (
    INT_T, MUTEZ_T, NAT_T, STRING_T, Env, Int, Mutez, Nat, Pair, Str, Success, TMap,
)
from michelkit.corpus import initial_votes, vote_contract, voting_spec
from michelkit.interp import eval_seq
from michelkit.syntax import ContractSrc, parse_code
from michelkit.typecheck import typecheck_contract, typecheck_seq
from michelkit.verify import (
    MAX_WIDTH, TRUE_POST, Predicate, _gen_mutez, check_contract_correct, check_wp_correct,
    gen_postcondition, gen_stack, gen_stack_ty, gen_typed_program, program_depth,
    stack_width, wp,
)


def typed(code, inp):
    return typecheck_seq(parse_code(code), inp)


def test_wp_of_add():
    code = typed("{ ADD }", (NAT_T, NAT_T))
    pre = wp(code, 10, Predicate(lambda s: s[0] == Nat(5)))
    assert pre((Nat(2), Nat(3)))
    assert not pre((Nat(2), Nat(2)))


def test_wp_is_false_when_code_fails_or_runs_out_of_fuel():
    fails = typed("{ IF { UNIT ; FAILWITH } { } }", (core.BOOL_T,))
    pre = wp(fails, 10, TRUE_POST)
    assert not pre((core.TRUE,)) and pre((core.FALSE,))
    assert not wp(typed("{ DUP ; DROP }", (NAT_T,)), 1, TRUE_POST)((Nat(0),))
    assert wp(typed("{ DUP ; DROP }", (NAT_T,)), 2, TRUE_POST)((Nat(0),))


def test_wp_of_mutez_overflow():
    code = typed("{ ADD }", (MUTEZ_T, MUTEZ_T))
    assert not wp(code, 5, TRUE_POST)((Mutez(core.MUTEZ_MAX), Mutez(1)))
    assert wp(code, 5, TRUE_POST)((Mutez(core.MUTEZ_MAX - 1), Mutez(1)))


def test_wp_of_loop_follows_iterations():
    code = typed("{ PUSH bool True ; LOOP { PUSH int 1 ; SWAP ; SUB ; DUP ; GT } }", (INT_T,))
    # one iteration costs 6 units (5 body nodes plus the loop test)
    assert wp(code, 2 + 6 * 3, Predicate(lambda s: s == (Int(0),)))((Int(3),))
    assert not wp(code, 1 + 6 * 3, TRUE_POST)((Int(3),))


def test_wp_on_vote_contract(vote_typed):
    votes = initial_votes()
    post = Predicate(lambda s: s[0].right.get(Str("Coq")) == Int(1))
    inp = (Pair(Str("Coq"), votes),)
    assert wp(vote_typed.code, 24, post, Env(5_000_000))(inp)
    assert not wp(vote_typed.code, 24, post, Env(4_999_999))(inp)
    assert not wp(vote_typed.code, 24, post, Env(5_000_000))((Pair(Str("OCaml"), votes),))


@given(st.integers(0, 10**6))
def test_wp_agrees_with_eval(seed):
    rng = random.Random(seed)
    inp = gen_stack_ty(rng)
    code, _ = gen_typed_program(rng, 6, inp)
    t = typecheck_seq(code, inp)
    stack, env = gen_stack(rng, inp), Env(_gen_mutez(rng))
    fuel = rng.choice((10_000, rng.randint(0, 40)))
    res = eval_seq(t, fuel, stack, env)
    post = gen_postcondition(rng, t.out, res.stack if isinstance(res, Success) else None)
    assert check_wp_correct(t, fuel, post, stack, env)


def test_vote_meets_its_spec(vote_typed):
    report = check_contract_correct(vote_typed, voting_spec(), 500, seed=1)
    assert report.ok, [str(c) for c in report.counterexamples[:3]]
    assert report.outcomes["Success"] > 50 and report.outcomes["Failed"] > 50


def test_wrong_spec_is_refuted(vote_typed):
    report = check_contract_correct(vote_typed, voting_spec(increment=2), 500, seed=1, stop_after=1)
    assert not report.ok
    assert "violates" in report.counterexamples[0].reason


def test_harness_catches_a_broken_contract():
    src = vote_contract()
    # forget the new count instead of storing it
    broken = src.code[:-3] + parse_code("{ DROP 2 ; NIL operation ; PAIR }")
    bad = typecheck_contract(ContractSrc(src.parameter_ty, src.storage_ty, broken))
    report = check_contract_correct(bad, voting_spec(), 200, seed=0, stop_after=1)
    assert not report.ok


def test_depth_and_width_measures():
    assert program_depth(()) == 0
    assert program_depth(parse_code("{ DUP ; DROP }")) == 1
    assert program_depth(parse_code("{ DIP { IF { DUP } { LOOP { } } } }")) == 3
    # DIP 2 sets two slots aside; the body then pushes to three visible ones
    t = typecheck_seq(parse_code("{ DIP 2 { PUSH nat 1 ; PUSH nat 2 } }"), (NAT_T,) * 3)
    assert stack_width(t) == 5


@given(st.integers(0, 10**6))
def test_generator_respects_bounds(seed):
    rng = random.Random(seed)
    inp = gen_stack_ty(rng)
    code, out = gen_typed_program(rng, 6, inp)
    t = typecheck_seq(code, inp)
    assert t.out == out
    assert program_depth(code) <= 6
    assert stack_width(t) <= MAX_WIDTH


def test_generator_is_deterministic():
    a = gen_typed_program(42, 6, (NAT_T, STRING_T))
    b = gen_typed_program(42, 6, (NAT_T, STRING_T))
    assert a == b
    assert gen_stack(7, (TMap(STRING_T, INT_T), MUTEZ_T)) == gen_stack(7, (TMap(STRING_T, INT_T), MUTEZ_T))
