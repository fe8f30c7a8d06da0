import random

import pytest
from hypothesis import given, strategies as st

from michelkit import core
from michelkit.albert import (
    Record, TRecord, TVariant, Variant, eval_albert, parse_albert, typecheck_albert,
)
from michelkit.albert_compile import (
    AlbertCompileError, compile_and_check, compile_contract, compile_ty, from_michelson,
    gen_albert_value, swap_car_cdr, to_michelson,
)
from michelkit.core import (
    BOOL_T, INT_T, MUTEZ_T, NAT_T, STRING_T, UNIT_T, Env, TMap, TOr, TPair,
)
from michelkit.corpus import vote_albert_sampler
from michelkit.interp import ContractOutput, run_contract
from michelkit.optimize import cleanup_fixpoint
from michelkit.syntax import CAR, CDR, ContractSrc, node_count, parse_contract, print_contract
from michelkit.typecheck import typecheck_contract

# Every statement form: dup, projection, map lookup, assert_some, arithmetic, comparison,
# bool / option / or / variant matches, constructors, calls as expression and statement,
# record patterns, constants with annotations, update, drop and failwith.
KITCHEN_SINK = """
type shape = [ Dot : unit | Square : nat | Line : int ]
type st = { count : nat ; last : option string ; tally : map string nat }

def bump : { n : nat } -> { m : nat } =
  one = 1 ; m = n + one

def record_name : { name : string ; tally : map string nat } -> { tally : map string nat } =
  (k0, k1) = dup name ;
  (t0, t1) = dup tally ;
  prev = t0[k0] ;
  match prev with
    None u -> drop u ; z = (0 : nat) ; nv = Some z
  | Some p -> { m = q } = bump { n = p } ; nv = Some q
  end ;
  tally = update t1 k1 nv

def main : { param : [ Named : string | Draw : shape | Reset : unit ] ; store : st }
        -> { operations : list operation ; store : st } =
  { count = c ; last = l ; tally = t } = store ;
  match param with
    Named nm ->
      (n0, n1) = dup nm ;
      record_name { name = n0 ; tally = t } ;
      drop l ; l = Some n1 ;
      (c0, c1) = dup c ;
      big = c0 >= 100 ;
      match big with
        True u -> drop u ; drop l ; drop tally ; failwith c1
      | False u -> drop u ; { m = c } = bump { n = c1 } ; t = tally
      end
  | Draw s ->
      match s with
        Dot u -> drop u
      | Square k -> c = c + k
      | Line i -> drop c ; drop l ; drop t ; failwith i
      end ;
      drop l ; l = (None : option string) ; { m = c } = bump { n = c }
  | Reset u -> drop u ; drop c ; drop l ; drop t ; failwith "reset is disabled"
  end ;
  store = { count = c ; last = l ; tally = t } ;
  operations = ([] : list operation)
"""


def test_compile_ty():
    votes = TMap(STRING_T, NAT_T)
    storage = TRecord((("threshold", MUTEZ_T), ("votes", votes)))
    assert compile_ty(storage) == TPair(MUTEZ_T, votes)
    assert compile_ty(TRecord((("x", INT_T),))) == INT_T
    abc = TVariant((("A", UNIT_T), ("B", UNIT_T), ("C", INT_T)))
    assert compile_ty(abc) == TOr(UNIT_T, TOr(UNIT_T, INT_T))
    assert compile_ty(BOOL_T) == BOOL_T
    for empty in (TRecord(()), TVariant(())):
        with pytest.raises(AlbertCompileError):
            compile_ty(empty)


def test_vote_alb_compiles_to_a_well_typed_contract(vote_alb):
    src = compile_contract(parse_albert(vote_alb), "guarded_vote")
    assert src.parameter_ty == STRING_T
    assert src.storage_ty == TPair(MUTEZ_T, TMap(STRING_T, NAT_T))
    typecheck_contract(src)
    assert parse_contract(print_contract(src)) == src


def test_projection_compiles_to_car_or_cdr():
    def count(field, ins):
        src = f"""type p = {{ a : nat ; b : string }}
        def main : {{ param : unit ; store : p }} -> {{ operations : list operation ; store : p }} =
          drop param ; (s0, s1) = dup store ; x = s0.{field} ; drop x ; store = s1 ;
          operations = ([] : list operation)"""
        return compile_contract(parse_albert(src), "main").code.count(ins)
    # one CAR and one CDR come from splitting the input pair
    assert count("a", CAR) == 2 and count("a", CDR) == 1
    assert count("b", CAR) == 1 and count("b", CDR) == 2


def test_minimal_main():
    src = """def m : { param : unit ; store : unit } -> { operations : list operation ; store : unit } =
      drop param ; operations = ([] : list operation)"""
    c = compile_contract(parse_albert(src), "m")
    t = typecheck_contract(c)
    assert run_contract(t, core.UNIT, core.UNIT) == ContractOutput((), core.UNIT)
    assert compile_and_check(parse_albert(src), "m", 20, 0).ok


def test_bad_main_signatures():
    with pytest.raises(AlbertCompileError, match="unknown main"):
        compile_contract(parse_albert("def f : {} -> {} = "), "main")
    with pytest.raises(AlbertCompileError, match="must have type"):
        compile_contract(parse_albert("def f : {} -> {} = "), "f")


def test_variant_match_agrees_with_evaluator():
    src = """type abc = [ A : unit | B : unit | C : int ]
    def main : { param : abc ; store : int } -> { operations : list operation ; store : int } =
      match param with
        A u -> drop u ; drop store ; store = (1 : int)
      | B u -> drop u ; drop store ; store = -2
      | C i -> drop store ; store = i
      end ;
      operations = ([] : list operation)"""
    t = typecheck_albert(parse_albert(src))
    c = typecheck_contract(compile_contract(t, "main"))
    pty = t.fun("main").consumed.field_ty("param")
    for v in (Variant("A", core.UNIT), Variant("B", core.UNIT), Variant("C", core.Int(9))):
        expected = eval_albert(t, "main", Record.of(param=v, store=core.Int(0)))
        got = run_contract(c, to_michelson(v, pty), core.Int(0))
        assert got.storage == expected["store"]


def test_kitchen_sink_differential():
    t = typecheck_albert(parse_albert(KITCHEN_SINK))
    typecheck_contract(compile_contract(t, "main"))
    report = compile_and_check(t, "main", 400, seed=3)
    assert report.ok, [str(c) for c in report.counterexamples[:2]]
    assert report.outcomes["success"] > 50 and report.outcomes["failed"] > 50
    assert compile_and_check(t, "main", 200, seed=4, optimize=True).ok


def test_vote_alb_differential(vote_alb):
    report = compile_and_check(parse_albert(vote_alb), "guarded_vote", 200, seed=0,
                               sampler=vote_albert_sampler)
    assert report.ok
    assert report.outcomes["success"] > 20 and report.outcomes["failed"] > 20


def test_mutated_compiler_is_caught(vote_alb):
    # on vote.alb the swap breaks typing; on a same-typed record it changes results
    assert not compile_and_check(parse_albert(vote_alb), "guarded_vote", 50, 0,
                                 transform=swap_car_cdr).ok
    src = """type p = { x : nat ; y : nat }
    def main : { param : p ; store : p } -> { operations : list operation ; store : p } =
      drop store ; store = param ; operations = ([] : list operation)"""
    report = compile_and_check(parse_albert(src), "main", 50, 0, transform=swap_car_cdr)
    assert report.trials == 50 and not report.ok


def test_optimized_output_is_smaller_and_equivalent(vote_alb):
    src = compile_contract(parse_albert(vote_alb), "guarded_vote")
    opt = cleanup_fixpoint(src.code)
    assert node_count(opt) < node_count(src.code)
    t1 = typecheck_contract(src)
    t2 = typecheck_contract(ContractSrc(src.parameter_ty, src.storage_ty, opt))
    rng = random.Random(5)
    for _ in range(50):
        p, s, amount = vote_albert_sampler(rng)
        ms = to_michelson(s, TRecord((("threshold", MUTEZ_T), ("votes", TMap(STRING_T, NAT_T)))))
        assert run_contract(t1, p, ms, Env(amount)) == run_contract(t2, p, ms, Env(amount))


@given(st.integers(0, 10**6))
def test_value_translation_round_trips(seed):
    t = typecheck_albert(parse_albert(KITCHEN_SINK))
    main = t.fun("main")
    rng = random.Random(seed)
    for ty in (main.consumed, t.fun("record_name").produced, t.resolve(main.consumed.field_ty("store"))):
        v = gen_albert_value(rng, ty)
        m = to_michelson(v, ty)
        assert core.value_has_type(m, compile_ty(ty))
        assert from_michelson(m, ty) == v


def test_layout_is_sorted_by_name():
    src = """def main : { param : nat ; store : nat } -> { operations : list operation ; store : nat } =
      b = param ; a = store ; c = a + b ; store = c ; operations = ([] : list operation)"""
    t = typecheck_albert(parse_albert(src))
    assert compile_and_check(t, "main", 30, 0).ok
    r = run_contract(typecheck_contract(compile_contract(t, "main")), core.Nat(2), core.Nat(3))
    assert r.storage == core.Nat(5)
