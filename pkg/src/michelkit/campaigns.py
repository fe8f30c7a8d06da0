"""Randomized campaigns over generated programs.

Each campaign is deterministic in its seed: trial ``i`` draws everything
from ``random.Random(f"{seed}:{i}")``, so a failing trial can be replayed
alone and results do not depend on how many trials ran before it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import core
from .core import Env, OutOfFuel, Success
from .interp import eval_seq
from .optimize import cleanup
from .syntax import node_count, parse_code, print_block
from .typecheck import MichelsonTypeError, typecheck_seq
from .verify import (
    MAX_DEPTH, MAX_WIDTH, Report, _gen_mutez, check_wp_correct, gen_postcondition,
    gen_stack, gen_stack_ty, gen_typed_program,
)


@dataclass(frozen=True)
class CampaignConfig:
    trials: int = 1000
    seed: int = 0
    stacks_per_program: int = 10
    fuel: int = 10_000
    max_depth: int = MAX_DEPTH
    max_width: int = MAX_WIDTH


@dataclass(frozen=True)
class ProgramCounterexample:
    trial: int
    code: tuple
    stack_ty: tuple
    reason: str

    def __str__(self) -> str:
        return (f"trial {self.trial}: {self.reason}\n  input type: "
                f"{core.format_stack_ty(self.stack_ty)}\n  code: {print_block(self.code)}")


def trial_rng(seed: int, trial: int) -> random.Random:
    return random.Random(f"{seed}:{trial}")


def gen_trial_program(rng: random.Random, cfg: CampaignConfig):
    stack_ty = gen_stack_ty(rng, cfg.max_width)
    code, _ = gen_typed_program(rng, cfg.max_depth, stack_ty)
    return code, stack_ty


def optimize_campaign(cfg: CampaignConfig) -> Report:
    """Cleanup preserves typing and evaluation results on generated programs."""
    report = Report()
    for i in range(cfg.trials):
        rng = trial_rng(cfg.seed, i)
        code, stack_ty = gen_trial_program(rng, cfg)
        report.trials += 1

        def bad(reason):
            report.counterexamples.append(ProgramCounterexample(i, code, stack_ty, reason))

        typed = typecheck_seq(code, stack_ty)
        opt = cleanup(code)
        try:
            typed_opt = typecheck_seq(opt, stack_ty)
        except MichelsonTypeError as e:
            bad(f"optimized code does not typecheck: {e}")
            continue
        if typed_opt.out != typed.out:
            bad("optimized code has a different output type")
            continue
        for _ in range(cfg.stacks_per_program):
            stack = gen_stack(rng, stack_ty)
            env = Env(_gen_mutez(rng))
            r1 = eval_seq(typed, cfg.fuel, stack, env)
            r2 = eval_seq(typed_opt, cfg.fuel, stack, env)
            report.tally(type(r1).__name__)
            if isinstance(r1, OutOfFuel):
                continue
            if r1 != r2:
                bad(f"results differ on {stack!r}: {r1} vs {r2}")
                break
    return report


def wp_campaign(cfg: CampaignConfig) -> Report:
    """The weakest precondition agrees with evaluation on generated triples.

    Each trial is one (program, stack, postcondition) triple.  Fuel is
    either the configured budget or a small random one, so that running
    out of fuel is exercised too.
    """
    report = Report()
    for i in range(cfg.trials):
        rng = trial_rng(cfg.seed, i)
        code, stack_ty = gen_trial_program(rng, cfg)
        typed = typecheck_seq(code, stack_ty)
        stack = gen_stack(rng, stack_ty)
        env = Env(_gen_mutez(rng))
        fuel = cfg.fuel if rng.random() < 0.7 else rng.randint(0, node_count(code) + 2)
        res = eval_seq(typed, fuel, stack, env)
        post = gen_postcondition(rng, typed.out, res.stack if isinstance(res, Success) else None)
        report.trials += 1
        holds = post(res.stack) if isinstance(res, Success) else False
        report.tally(f"{type(res).__name__}/{'post' if holds else 'no-post'}")
        if not check_wp_correct(typed, fuel, post, stack, env):
            report.counterexamples.append(ProgramCounterexample(
                i, code, stack_ty, f"wp disagrees with evaluation (post: {post}, fuel {fuel}, "
                f"stack {stack!r})"))
    return report


def roundtrip_campaign(cfg: CampaignConfig) -> Report:
    """Printing then parsing a generated program gives it back."""
    report = Report()
    for i in range(cfg.trials):
        rng = trial_rng(cfg.seed, i)
        code, stack_ty = gen_trial_program(rng, cfg)
        report.trials += 1
        if parse_code(print_block(code)) != code:
            report.counterexamples.append(
                ProgramCounterexample(i, code, stack_ty, "print/parse round trip changed the code"))
    return report


CAMPAIGNS = {"optimize": optimize_campaign, "wp": wp_campaign, "roundtrip": roundtrip_campaign}
