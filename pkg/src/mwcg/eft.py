"""Error-free transformations on FP64.

These are the primitives every multi-word operation is built from: each one
decomposes a sum or product of two doubles into the rounded result plus the
exact rounding error.  All of them assume round-to-nearest-even and a true
fused multiply-add (single rounding); a check at import time rejects
environments where fma is emulated by a separate multiply and add.

NaN and infinity propagate through all operations per IEEE 754; nothing here
traps.
"""

import math
from typing import NamedTuple

import gmpy2

__all__ = [
    "U",
    "Fp64Pair",
    "FmaUnavailableError",
    "fma",
    "two_sum",
    "quick_two_sum",
    "two_prod_fma",
]

# Unit round-off for FP64 with round-to-nearest.
U = 2.0 ** -53


class FmaUnavailableError(RuntimeError):
    """Raised when no correctly rounded fused multiply-add is available."""


def _fma_f64(a, b, c):
    # gmpy2.fma is correctly rounded at the ambient 53-bit precision, which
    # is exactly IEEE FP64 fma for in-range results.
    return float(gmpy2.fma(a, b, c))


def _check_fused():
    # (1 + 2^-27)^2 = 1 + 2^-26 + 2^-54: the error term survives only if the
    # multiply-add is fused.  An unfused emulation returns 0 here.
    a = 1.0 + 2.0 ** -27
    if _fma_f64(a, a, -(a * a)) != 2.0 ** -54:
        raise FmaUnavailableError(
            "fused multiply-add is not correctly rounded in this environment; "
            "two_prod_fma would silently lose its error term"
        )


_check_fused()


def fma(a, b, c):
    """Fused a*b + c with a single rounding.

    Plain floats go through the correctly rounded backend; instrumented
    scalars (anything exposing a classmethod ``fma3``) are dispatched so the
    same algorithm bodies can be executed for operation counting.
    """
    if type(a) is float and type(b) is float and type(c) is float:
        return _fma_f64(a, b, c)
    for v in (a, b, c):
        if not isinstance(v, float):
            return type(v).fma3(a, b, c)
    return _fma_f64(a, b, c)


class Fp64Pair(NamedTuple):
    """Rounded result plus its exact rounding error (hi + lo is exact)."""

    hi: float
    lo: float


def two_sum(a, b):
    """Error-free sum: hi = fl(a+b), hi + lo = a + b exactly.

    No ordering requirement on |a|, |b|.  6 FP64 operations.
    """
    x = a + b
    z = x - a
    y = (a - (x - z)) + (b - z)
    return Fp64Pair(x, y)


CHECK_QUICK_TWO_SUM = False


def quick_two_sum(a, b):
    """Error-free sum assuming |a| >= |b| (caller's obligation).

    3 FP64 operations.  Callers are trusted by default: the double-word
    renormalization step applies this to intermediates that can violate the
    magnitude ordering under heavy cancellation, in which case the error term
    is merely approximate -- the documented accuracy trade of those
    algorithms, matching the compiled kernels, not a bug to trap.  Setting
    ``CHECK_QUICK_TWO_SUM`` makes the result verified against two_sum (the
    exact guarantee the |a| >= |b| precondition buys; a strict magnitude
    check would spuriously reject benign cases such as QuickTwoSum(0, e)).
    """
    x = a + b
    y = (a - x) + b
    if CHECK_QUICK_TWO_SUM and type(a) is float and type(b) is float:
        if math.isfinite(a) and math.isfinite(b):
            assert (x, y) == two_sum(a, b), \
                "quick_two_sum misused: result not error-free"
    return Fp64Pair(x, y)


def two_prod_fma(a, b):
    """Error-free product: hi = fl(a*b), hi + lo = a * b exactly.

    Requires a fused multiply-add.  Exactness is lost when the error term
    falls into the subnormal range; that is a documented precondition, not a
    trapped error.  2 FP64 operations (fma counted as one).
    """
    x = a * b
    y = fma(a, b, -x)
    return Fp64Pair(x, y)
