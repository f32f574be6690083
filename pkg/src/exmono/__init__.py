"""Exact verification toolkit for exceptional-type Lie algebras, seed elliptic curves and Selmer ledgers."""

__version__ = "0.1.0"
