import random

import pytest
from hypothesis import given, strategies as st

from michelkit.core import Env, OutOfFuel
from michelkit.interp import eval_seq
from michelkit.optimize import (
    cleanup, cleanup_fixpoint, pass_dig0dug0, pass_digndugn, pass_push_drop, pass_swapswap,
    visit,
)
from michelkit.syntax import node_count, parse_code
from michelkit.typecheck import typecheck_seq
from michelkit.verify import _gen_mutez, gen_stack, gen_stack_ty, gen_typed_program


def c(text):
    return parse_code(text)


# one case per documented rewrite, each checked against the pass that owns it
REWRITES = [
    (pass_dig0dug0, "{ DIG 1 }", "{ SWAP }"),
    (pass_dig0dug0, "{ DUG 1 }", "{ SWAP }"),
    (pass_dig0dug0, "{ DIP 0 { DUP ; DROP } }", "{ DUP ; DROP }"),
    (pass_dig0dug0, "{ DROP 0 ; DIG 0 ; DUG 0 }", "{ }"),
    (pass_digndugn, "{ DIG 3 ; DUG 3 }", "{ }"),
    (pass_swapswap, "{ SWAP ; SWAP }", "{ }"),
    (pass_push_drop, "{ PUSH nat 1 ; DROP 1 }", "{ }"),
    (pass_push_drop, "{ PUSH nat 1 ; DROP 3 }", "{ DROP 2 }"),
]


@pytest.mark.parametrize("p,before,after", REWRITES)
def test_documented_rewrites(p, before, after):
    assert p(c(before)) == c(after)


def test_passes_leave_other_code_alone():
    code = c("{ DIG 2 ; DUG 3 ; SWAP ; DUP ; SWAP ; PUSH nat 1 ; DUP ; DROP ; DIP 1 { DROP } }")
    for p in (pass_dig0dug0, pass_digndugn, pass_swapswap, pass_push_drop):
        assert p(code) == code


def test_rewrites_expose_new_matches_in_the_same_pass():
    assert pass_digndugn(c("{ DIG 2 ; DIG 3 ; DUG 3 ; DUG 2 }")) == ()
    assert pass_push_drop(c("{ PUSH nat 1 ; PUSH nat 2 ; DROP 1 ; DROP 1 }")) == ()
    assert pass_push_drop(c("{ PUSH nat 1 ; PUSH nat 2 ; DROP 2 }")) == ()
    assert pass_swapswap(c("{ DUP ; SWAP ; SWAP ; SWAP ; SWAP }")) == c("{ DUP }")


def test_passes_do_not_descend_but_visit_does():
    code = c("{ DIP { SWAP ; SWAP } }")
    assert pass_swapswap(code) == code
    assert visit(code, pass_swapswap) == c("{ DIP { } }")
    nested = c("{ IF { IF_NONE { DIG 1 ; DUG 1 } { } } { LOOP { PUSH int 1 ; DROP } } }")
    assert cleanup(nested) == c("{ IF { IF_NONE { } { } } { LOOP { } } }")


def test_cleanup_composition():
    assert cleanup(c("{ DIG 1 ; DUG 1 }")) == ()
    # swapswap runs after digndugn, so this needs a second round
    code = c("{ DIG 2 ; SWAP ; SWAP ; DUG 2 }")
    assert cleanup(code) == c("{ DIG 2 ; DUG 2 }")
    assert cleanup_fixpoint(code) == ()


def test_inner_dip_is_cleaned_before_inlining():
    assert cleanup(c("{ DIP 0 { DIG 1 ; DUG 0 } ; SWAP }")) == ()


def test_vote_contract_is_already_clean(vote_src):
    assert cleanup(vote_src.code) == vote_src.code


def _program(seed):
    rng = random.Random(seed)
    inp = gen_stack_ty(rng)
    code, _ = gen_typed_program(rng, 6, inp)
    return rng, inp, code


@given(st.integers(0, 10**6))
def test_cleanup_preserves_types_and_results(seed):
    rng, inp, code = _program(seed)
    typed = typecheck_seq(code, inp)
    opt = typecheck_seq(cleanup(code), inp)
    assert opt.out == typed.out
    for _ in range(3):
        stack, env = gen_stack(rng, inp), Env(_gen_mutez(rng))
        r = eval_seq(typed, 10_000, stack, env)
        if not isinstance(r, OutOfFuel):
            assert eval_seq(opt, 10_000, stack, env) == r


@given(st.integers(0, 10**6))
def test_cleanup_shrinks_and_fixpoint_is_stable(seed):
    _, _, code = _program(seed)
    once = cleanup(code)
    assert node_count(once) <= node_count(code)
    fixed = cleanup_fixpoint(code)
    assert cleanup(fixed) == fixed
