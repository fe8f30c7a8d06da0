"""Michelson and Albert workbench: interpreter, type checker, peephole
optimizer, weakest-precondition checker and an Albert-to-Michelson compiler."""

__version__ = "0.1.0"
