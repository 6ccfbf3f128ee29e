"""Proof-theoretic ordinal notation, sequent calculus and reduction engine."""
