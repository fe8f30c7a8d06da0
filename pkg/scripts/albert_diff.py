#!/usr/bin/env python3
"""Differential test of the Albert compiler on the bundled voting program.

Compares the Albert evaluator with the compiled Michelson, with and without
the peephole cleanup, under both the generic and the voting-specific input
sampler, and then checks that a deliberately broken compiler is caught.
"""

import argparse
import sys
from dataclasses import dataclass

from michelkit.albert import parse_albert, typecheck_albert
from michelkit.albert_compile import compile_and_check, compile_contract, swap_car_cdr
from michelkit.corpus import vote_albert_sampler, vote_albert_text
from michelkit.optimize import cleanup_fixpoint
from michelkit.syntax import node_count


@dataclass(frozen=True)
class DiffConfig:
    trials: int = 500
    seed: int = 0
    main: str = "guarded_vote"


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=DiffConfig.trials)
    p.add_argument("--seed", type=int, default=DiffConfig.seed)
    cfg = DiffConfig(**vars(p.parse_args(argv)))

    typed = typecheck_albert(parse_albert(vote_albert_text()))
    code = compile_contract(typed, cfg.main).code
    print(f"compiled {cfg.main}: {node_count(code)} nodes, "
          f"{node_count(cleanup_fixpoint(code))} after cleanup")
    status = 0
    for sampler_name, sampler in (("generic", None), ("vote", vote_albert_sampler)):
        for optimize in (False, True):
            r = compile_and_check(typed, cfg.main, cfg.trials, cfg.seed, sampler=sampler,
                                  optimize=optimize)
            label = f"{sampler_name:7s} {'optimized' if optimize else 'plain':9s}"
            print(f"{label} {r.summary()}  {dict(sorted(r.outcomes.items()))}")
            status |= not r.ok
    broken = compile_and_check(typed, cfg.main, cfg.trials, cfg.seed, transform=swap_car_cdr)
    print(f"CAR/CDR-swapped compiler: {broken.summary()}"
          + (f"  first: {broken.counterexamples[0]}" if broken.counterexamples else ""))
    status |= broken.ok  # a mutant that goes unnoticed is a failure of the harness
    return status


if __name__ == "__main__":
    sys.exit(main())
