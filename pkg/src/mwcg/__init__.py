"""Multi-word FP64 arithmetic (double/triple-word and quasi variants) with a
Conjugate Gradient sparse solver harness, benchmark CLI and exact-arithmetic
verification oracle."""

__version__ = "0.1.0"
