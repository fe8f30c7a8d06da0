"""Peephole passes over untyped Michelson sequences.

Each pass is a function from a flat instruction tuple to a new tuple; it
never looks inside nested blocks.  :func:`visit` lifts a pass to whole
programs, and :func:`cleanup` chains the four passes once each.  Passes
scan left to right; when a rewrite splices or removes instructions the scan
resumes at the first instruction whose neighbourhood changed, so patterns
that only become adjacent after a rewrite are caught in the same pass.
"""

from __future__ import annotations

from .syntax import SWAP, Dig, Dip, Drop, Dug, Push, map_bodies


def _rewrite(code, step) -> tuple:
    """Drive a local rewrite to a single left-to-right scan.

    ``step(code, i)`` returns ``None`` (no match at ``i``) or a pair
    ``(replacement, width)`` replacing ``code[i:i + width]``.
    """
    out = list(code)
    i = 0
    while i < len(out):
        r = step(out, i)
        if r is None:
            i += 1
            continue
        repl, width = r
        out[i:i + width] = repl
        # a new match can start one instruction before the rewritten spot
        i = max(i - 1, 0)
    return tuple(out)


def _dig0dug0(code, i):
    match code[i]:
        case Drop(0) | Dig(0) | Dug(0):
            return (), 1
        case Dip(0, body):
            return body, 1
        case Dig(1) | Dug(1):
            return (SWAP,), 1
    return None


def _digndugn(code, i):
    if i + 1 < len(code):
        match code[i], code[i + 1]:
            case Dig(n), Dug(m) if n == m:
                return (), 2
    return None


def _swapswap(code, i):
    if i + 1 < len(code) and code[i] == SWAP and code[i + 1] == SWAP:
        return (), 2
    return None


def _push_drop(code, i):
    if i + 1 < len(code):
        match code[i], code[i + 1]:
            case Push(), Drop(1):
                return (), 2
            case Push(), Drop(n) if n > 1:
                return (Drop(n - 1),), 2
    return None


def pass_dig0dug0(code) -> tuple:
    """Drop DROP 0 / DIG 0 / DUG 0, inline DIP 0, turn DIG 1 / DUG 1 into SWAP."""
    return _rewrite(code, _dig0dug0)


def pass_digndugn(code) -> tuple:
    return _rewrite(code, _digndugn)


def pass_swapswap(code) -> tuple:
    return _rewrite(code, _swapswap)


def pass_push_drop(code) -> tuple:
    return _rewrite(code, _push_drop)


PASSES = (pass_dig0dug0, pass_digndugn, pass_swapswap, pass_push_drop)


def visit(code, p) -> tuple:
    """Apply pass ``p`` to every nested block, innermost first, then to ``code``."""
    inner = tuple(map_bodies(ins, lambda b: visit(b, p)) for ins in code)
    return p(inner)


def cleanup(code) -> tuple:
    for p in PASSES:
        code = visit(code, p)
    return code


def cleanup_fixpoint(code, max_rounds: int = 100) -> tuple:
    """Iterate :func:`cleanup` until the code stops changing."""
    for _ in range(max_rounds):
        new = cleanup(code)
        if new == code:
            return new
        code = new
    return code

