"""The bundled example contracts and the functional spec of the voting contract."""

from __future__ import annotations

import random
from importlib import resources

from . import core
from .core import Env, Int, Mutez, Nat, Pair, Str
from .syntax import node_count, parse_contract
from .verify import ContractSpec

VOTE_FEE = 5_000_000
CANDIDATES = ("Agda", "Coq", "Isabelle")
_OTHER_NAMES = ("OCaml", "", "coq", "Lean")


def contract_text(name: str) -> str:
    """Source text of a bundled contract, e.g. ``"vote.tz"``."""
    return resources.files("michelkit").joinpath("contracts").joinpath(name).read_text(encoding="utf-8")


def contract_path(name: str):
    return resources.files("michelkit").joinpath("contracts").joinpath(name)


def corpus_names(suffix: str = ".tz") -> list[str]:
    """Names of the bundled files with the given suffix, sorted."""
    root = resources.files("michelkit").joinpath("contracts")
    return sorted(p.name for p in root.iterdir() if p.name.endswith(suffix))


def vote_contract():
    return parse_contract(contract_text("vote.tz"))


def vote_albert_text() -> str:
    return contract_text("vote.alb")


def initial_votes(count=Int, **counts) -> core.Map:
    """Vote map with every candidate at 0 unless overridden; ``count`` wraps the counts."""
    votes = {c: 0 for c in CANDIDATES} | counts
    return core.Map(tuple((Str(k), count(v)) for k, v in votes.items()))


def _sample_ballot(rng: random.Random, count=Int):
    """A (votes, name, amount) triple; roughly half of the calls should succeed."""
    names = list(CANDIDATES) + [n for n in _OTHER_NAMES if rng.random() < 0.5]
    entries = {}
    for n in names:
        if rng.random() < 0.8:
            entries[Str(n)] = count(rng.choice((0, 1, 7, rng.randint(0, 10**6))))
    votes = core.Map(tuple(entries.items()))
    if rng.random() < 0.6 and entries:
        name = rng.choice(sorted(entries, key=lambda s: s.value))
    else:
        name = Str(rng.choice(CANDIDATES + _OTHER_NAMES))
    amount = rng.choice((VOTE_FEE, VOTE_FEE - 1, VOTE_FEE + 1, 0, 4_000_000,
                         rng.randint(0, 2 * VOTE_FEE), core.MUTEZ_MAX))
    return votes, name, amount


def voting_spec(increment: int = 1) -> ContractSpec:
    """Specification of the voting contract.

    A call succeeds exactly when at least 5 tez are sent and the parameter
    is already a key of the storage map; it then emits no operation and
    adds ``increment`` to that key's count, leaving the others unchanged.
    ``increment=2`` gives a deliberately wrong spec.
    """
    fuel = node_count(vote_contract().code)

    def relation(inp, env: Env, out) -> bool:
        name, votes = inp[0].left, inp[0].right
        if env.amount < VOTE_FEE or name not in votes:
            return False
        if len(out) != 1 or not isinstance(out[0], Pair):
            return False
        ops, new_votes = out[0].left, out[0].right
        expected = votes.update(name, Int(votes.get(name).value + increment))
        return ops == core.List() and new_votes == expected

    def candidates(inp, env: Env):
        name, votes = inp[0].left, inp[0].right
        if name not in votes:
            return
        v = votes.get(name).value
        for w in range(v - 1, v + 3):
            yield (Pair(core.List(), votes.update(name, Int(w))),)

    def sampler(rng: random.Random):
        votes, name, amount = _sample_ballot(rng)
        return (Pair(name, votes),), Env(amount)

    return ContractSpec(relation, lambda inp: fuel, candidates, sampler,
                        name=f"voting(+{increment})")


def vote_albert_sampler(rng: random.Random):
    """(param, store, amount) triples for ``guarded_vote`` with a random threshold."""
    from .albert import Record

    votes, name, amount = _sample_ballot(rng, count=Nat)
    threshold = rng.choice((VOTE_FEE, amount, amount + 1, max(amount - 1, 0), 0))
    return name, Record.of(threshold=Mutez(min(threshold, core.MUTEZ_MAX)), votes=votes), amount
