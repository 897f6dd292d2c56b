"""Polyadic Heyting algebras: formulas, Kripke semantics, proof search,
Henkin saturation, neat reducts and interpolant search."""

__version__ = "0.1.0"
