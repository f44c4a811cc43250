"""lassorank: linear ranking functions for single-path linear-constraint
loops with preconditions — exact rational LP with Farkas certificates,
inductive-invariant checking, reduction compilers from Boolean programs,
Petri nets/VAS, and linear recurrences, plus brute-force oracles."""

__version__ = "0.1.0"
