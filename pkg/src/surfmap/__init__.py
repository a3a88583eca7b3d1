"""Combinatorial surface maps: normalization, factorization through
pinches and branched coverings, degree computation, and exact checks of
the degree-Euler characteristic inequality."""

__version__ = "0.1.0"
