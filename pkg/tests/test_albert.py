import random

import pytest
from hypothesis import given, strategies as st

from michelkit import core
from michelkit.albert import (
    AlbertSyntaxError, AlbertTypeError, LinearityError, Record, TRecord, Variant,
    albert_value_has_type, eval_albert, format_albert_value, parse_albert,
    parse_albert_value, typecheck_albert,
)
from michelkit.albert_compile import gen_albert_value
from michelkit.core import Failed, Mutez, Nat, Str
from michelkit.corpus import initial_votes, vote_albert_sampler


def with_unbound_threshold(text):
    """vote.alb with the comparison reading `threshold0`, a name never bound."""
    return text.replace("ok = am >= threshold;", "ok = am >= threshold0;")


def store(**counts):
    return Record.of(threshold=Mutez(5_000_000), votes=initial_votes(count=Nat, **counts))


def arg(name, s=None):
    return Record.of(param=Str(name), store=s or store())


def test_vote_alb_structure(vote_alb):
    c = parse_albert(vote_alb)
    assert [n for n, _ in c.types] == ["storage_ty"]
    assert [f.name for f in c.funs] == ["vote", "guarded_vote"]
    assert len(c.fun("vote").body) == 11


def test_vote_alb_typechecks(vote_alb):
    t = typecheck_albert(parse_albert(vote_alb))
    gv = t.fun("guarded_vote")
    assert gv.consumed.labels == ("param", "store")
    assert gv.produced.labels == ("operations", "store")
    assert gv.consumed.field_ty("store") == t.aliases["storage_ty"]


def test_with_unbound_threshold_has_an_unbound_name(vote_alb):
    with pytest.raises(AlbertTypeError, match="unbound variable 'threshold0'"):
        typecheck_albert(parse_albert(with_unbound_threshold(vote_alb)))


def test_using_a_value_twice_is_rejected(vote_alb):
    text = (vote_alb.replace("(state0, state1) = dup state;", "")
            .replace("state0[param0]", "state[param0]")
            .replace("update state1", "update state"))
    with pytest.raises(LinearityError, match="'state' is used after being consumed"):
        typecheck_albert(parse_albert(text))


def test_forgetting_a_value_is_rejected(vote_alb):
    text = vote_alb.replace("drop t;", "")
    with pytest.raises(LinearityError, match="'t' is never consumed"):
        typecheck_albert(parse_albert(text))


def test_empty_function():
    t = typecheck_albert(parse_albert("def f : {} -> {} = "))
    assert eval_albert(t, "f", Record(())) == Record(())


def test_parse_errors():
    with pytest.raises(AlbertSyntaxError):
        parse_albert("def f : {b : bool} -> {} = match b with True t -> drop t | False f -> drop f")
    with pytest.raises(AlbertSyntaxError, match="unsupported operator"):
        parse_albert("def f : {a : nat; b : nat} -> {c : int} = c = a - b")
    with pytest.raises(AlbertSyntaxError) as e:
        parse_albert("def f : {} -> {} =\n  x = ")
    assert e.value.line == 2


@pytest.mark.parametrize("src,err", [
    ("def f : {a : nat} -> {a : nat} = a = 1", "rebound while still live"),
    ("def f : {a : nat} -> {b : nat} = b = a ; c = a", "used after being consumed"),
    ("def f : {a : nat} -> {b : string} = b = a", "produces b : nat"),
    ("def f : {} -> {b : nat} = b = g {}\ndef g : {} -> {b : nat} = b = 1", "defined before use"),
    ("def f : {a : string} -> {b : nat} = b = a + 1", "cannot add"),
    ("def f : {a : nat} -> {} = x = a.l ; drop x", "no field"),
    ("def f : {o : option nat} -> {r : nat} = match o with Some x -> r = x end", "exactly one arm"),
])
def test_type_errors(src, err):
    with pytest.raises(AlbertTypeError, match=err):
        typecheck_albert(parse_albert(src))


def test_match_arms_must_agree():
    src = """def f : {b : bool} -> {r : nat} =
      match b with
        True t -> drop t ; r = 1
      | False u -> drop u ; s = 2
      end"""
    with pytest.raises(AlbertTypeError, match="different variables"):
        typecheck_albert(parse_albert(src))


def test_failing_arm_joins_with_anything():
    src = """def f : {b : bool} -> {r : nat} =
      match b with True t -> drop t ; r = 1 | False u -> failwith u end"""
    t = typecheck_albert(parse_albert(src))
    assert eval_albert(t, "f", Record.of(b=core.TRUE)) == Record.of(r=Nat(1))
    assert eval_albert(t, "f", Record.of(b=core.FALSE)) == Failed(core.UNIT)


def test_record_patterns_ignore_field_order():
    src = """type p = { x : nat ; y : string }
    def f : { a : p } -> { b : p } =
      { y = s ; x = n } = a ;
      b = { y = s ; x = n }"""
    t = typecheck_albert(parse_albert(src))
    v = Record.of(x=Nat(1), y=Str("s"))
    assert eval_albert(t, "f", Record.of(a=v)) == Record.of(b=v)


def test_guarded_vote_golden_runs(vote_alb):
    t = typecheck_albert(parse_albert(vote_alb))
    ok = eval_albert(t, "guarded_vote", arg("Coq"), 5_000_000)
    assert ok == Record.of(operations=core.List(), store=store(Coq=1))
    cheap = eval_albert(t, "guarded_vote", arg("Coq"), 4_000_000)
    assert cheap == Failed(Str("you are so cheap!"))
    assert eval_albert(t, "vote", arg("OCaml"), 0) == Failed(core.UNIT)
    assert eval_albert(t, "vote", arg("OCaml"), 10**7) == Failed(core.UNIT)


def test_variants():
    src = """type c = [ A : unit | B : nat | C : int ]
    def f : { x : c } -> { y : nat } =
      match x with A u -> drop u ; y = 0 | B n -> y = n | C i -> drop i ; y = 7 end
    def g : { n : nat } -> { x : c } = x = B n"""
    t = typecheck_albert(parse_albert(src))
    assert eval_albert(t, "f", Record.of(x=Variant("A", core.UNIT))) == Record.of(y=Nat(0))
    assert eval_albert(t, "f", Record.of(x=Variant("B", Nat(4)))) == Record.of(y=Nat(4))
    assert eval_albert(t, "f", Record.of(x=Variant("C", core.Int(-1)))) == Record.of(y=Nat(7))
    assert eval_albert(t, "g", Record.of(n=Nat(2))) == Record.of(x=Variant("B", Nat(2)))


def test_argument_type_is_checked(vote_alb):
    t = typecheck_albert(parse_albert(vote_alb))
    with pytest.raises(TypeError):
        eval_albert(t, "vote", Record.of(param=Nat(1), store=store()))


@given(st.integers(0, 10**6))
def test_each_binding_is_read_once(seed):
    from michelkit.corpus import vote_albert_text
    t = typecheck_albert(parse_albert(vote_albert_text()))
    param, s, amount = vote_albert_sampler(random.Random(seed))
    reads = {}
    res = eval_albert(t, "guarded_vote", Record.of(param=param, store=s), amount, reads)
    if isinstance(res, Failed):
        assert all(n <= 1 for n in reads.values())
    else:
        assert set(reads.values()) == {1}
        assert albert_value_has_type(res, t.fun("guarded_vote").produced)


@given(st.integers(0, 10**6))
def test_value_literals_round_trip(seed):
    from michelkit.corpus import vote_albert_text
    t = typecheck_albert(parse_albert(vote_albert_text()))
    ty = t.fun("vote").consumed
    v = gen_albert_value(random.Random(seed), ty)
    assert parse_albert_value(format_albert_value(v), ty) == v


def test_value_literal_errors():
    ty = TRecord((("a", core.NAT_T),))
    assert parse_albert_value("{ a = 3 }", ty) == Record.of(a=Nat(3))
    with pytest.raises(AlbertSyntaxError):
        parse_albert_value("{ a = -3 }", ty)
    with pytest.raises(AlbertSyntaxError):
        parse_albert_value("{ b = 3 }", ty)
