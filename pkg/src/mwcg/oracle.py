"""Ground-truth arithmetic for verification.

Two tools live here, used only by tests, the verifier, and the problem
generator:

* :class:`ExactValue` -- an arbitrary-precision dyadic rational
  ``sign * mantissa * 2**exponent``.  Every finite FP64 converts losslessly,
  and sums/products of such values are exact, so the error-free contracts of
  the transformation layer can be checked with no rounding anywhere.
* :class:`CountingScalar` -- a float wrapper that counts FP64 operations
  (add, sub, mul, div, fma each +1), so the published operation counts of the
  multi-word algorithms are testable by running the very same code paths.
"""

import math
import threading
from fractions import Fraction

from . import eft

__all__ = [
    "ExactValue",
    "CountingScalar",
    "exact_from_fp64",
    "exact_add",
    "exact_mul",
    "exact_neg",
    "exact_compare",
    "exact_round_to_fp64",
    "reset_op_count",
    "op_count",
]


class ExactValue:
    """Dyadic rational in canonical form (mantissa odd, or the exact zero)."""

    __slots__ = ("sign", "mantissa", "exponent")

    def __init__(self, sign, mantissa, exponent):
        if mantissa < 0:
            raise ValueError("mantissa must be non-negative; use sign")
        if sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or +1")
        if mantissa == 0 or sign == 0:
            sign, mantissa, exponent = 0, 0, 0
        else:
            shift = (mantissa & -mantissa).bit_length() - 1
            mantissa >>= shift
            exponent += shift
        self.sign = sign
        self.mantissa = mantissa
        self.exponent = exponent

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_fp64(cls, x):
        if not isinstance(x, float):
            x = float(x)
        if not math.isfinite(x):
            raise ValueError("NaN/Inf have no exact dyadic representation")
        num, den = x.as_integer_ratio()
        return cls(-1 if num < 0 else (1 if num > 0 else 0),
                   abs(num), -(den.bit_length() - 1))

    @classmethod
    def from_int(cls, n):
        return cls(-1 if n < 0 else (1 if n > 0 else 0), abs(n), 0)

    @classmethod
    def zero(cls):
        return cls(0, 0, 0)

    # -- exact field operations -------------------------------------------

    def add(self, other):
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        e = min(self.exponent, other.exponent)
        m = ((self.sign * self.mantissa) << (self.exponent - e)) + \
            ((other.sign * other.mantissa) << (other.exponent - e))
        return ExactValue(-1 if m < 0 else (1 if m > 0 else 0), abs(m), e)

    def sub(self, other):
        return self.add(other.neg())

    def mul(self, other):
        return ExactValue(self.sign * other.sign,
                          self.mantissa * other.mantissa,
                          self.exponent + other.exponent)

    def neg(self):
        return ExactValue(-self.sign, self.mantissa, self.exponent)

    def __abs__(self):
        return ExactValue(abs(self.sign), self.mantissa, self.exponent)

    def scale2(self, k):
        """Exact multiplication by 2**k."""
        if self.sign == 0:
            return self
        return ExactValue(self.sign, self.mantissa, self.exponent + k)

    def compare(self, other):
        """-1, 0 or +1 as self <,=,> other."""
        d = self.sub(other)
        return d.sign

    # -- rounding ----------------------------------------------------------

    def to_fp64(self):
        """Round to nearest FP64, ties to even; overflow gives signed inf.

        Relies on CPython's correctly rounded int->float conversion and
        int/int true division.
        """
        if self.sign == 0:
            return 0.0
        try:
            if self.exponent >= 0:
                mag = float(self.mantissa << self.exponent)
            else:
                mag = self.mantissa / (1 << -self.exponent)
        except OverflowError:
            mag = math.inf
        return -mag if self.sign < 0 else mag

    # -- conveniences ------------------------------------------------------

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.sub(other)

    def __mul__(self, other):
        return self.mul(other)

    def __neg__(self):
        return self.neg()

    def __eq__(self, other):
        return (self.sign, self.mantissa, self.exponent) == \
            (other.sign, other.mantissa, other.exponent)

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __hash__(self):
        return hash((self.sign, self.mantissa, self.exponent))

    def __bool__(self):
        return self.sign != 0

    def as_fraction(self):
        f = Fraction(self.mantissa) * Fraction(2) ** self.exponent
        return -f if self.sign < 0 else f

    def decimal_str(self, digits=40):
        """Decimal rendering for human display (round-half-even)."""
        if self.sign == 0:
            return "0"
        f = abs(self.as_fraction())
        exp10 = 0
        while f >= 10:
            f /= 10
            exp10 += 1
        while f < 1:
            f *= 10
            exp10 -= 1
        scaled = f * Fraction(10) ** (digits - 1)
        q, r = divmod(scaled.numerator, scaled.denominator)
        half = scaled.denominator
        if 2 * r > half or (2 * r == half and q % 2 == 1):
            q += 1
        s = str(q)
        if len(s) > digits:  # rounding carried into a new leading digit
            s = s[:digits]
            exp10 += 1
        body = f"{s[0]}.{s[1:]}" if digits > 1 else s
        sign = "-" if self.sign < 0 else ""
        return f"{sign}{body}e{exp10:+d}"

    def __repr__(self):
        return f"ExactValue(sign={self.sign}, mantissa={self.mantissa}, exponent={self.exponent})"


# Free-function aliases over ExactValue for callers that prefer them.

def exact_from_fp64(x):
    return ExactValue.from_fp64(x)


def exact_add(a, b):
    return a.add(b)


def exact_mul(a, b):
    return a.mul(b)


def exact_neg(a):
    return a.neg()


def exact_compare(a, b):
    return a.compare(b)


def exact_round_to_fp64(a):
    return a.to_fp64()


# ---------------------------------------------------------------------------
# Instrumented scalar
# ---------------------------------------------------------------------------

_tls = threading.local()


def reset_op_count():
    _tls.count = 0


def op_count():
    return getattr(_tls, "count", 0)


def _tick():
    _tls.count = getattr(_tls, "count", 0) + 1


def _val(x):
    return x.value if isinstance(x, CountingScalar) else float(x)


class CountingScalar:
    """FP64 value whose arithmetic bumps a thread-local operation counter.

    Negation, absolute value and comparisons are free: sign manipulation is
    exact and the published counts only tally add/sub/mul/div/fma.
    """

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = float(value)

    # counted operations

    def __add__(self, other):
        _tick()
        return CountingScalar(self.value + _val(other))

    __radd__ = __add__

    def __sub__(self, other):
        _tick()
        return CountingScalar(self.value - _val(other))

    def __rsub__(self, other):
        _tick()
        return CountingScalar(_val(other) - self.value)

    def __mul__(self, other):
        _tick()
        return CountingScalar(self.value * _val(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        _tick()
        return CountingScalar(self.value / _val(other))

    def __rtruediv__(self, other):
        _tick()
        return CountingScalar(_val(other) / self.value)

    @classmethod
    def fma3(cls, a, b, c):
        _tick()
        return cls(eft._fma_f64(_val(a), _val(b), _val(c)))

    # free operations

    def __neg__(self):
        return CountingScalar(-self.value)

    def __abs__(self):
        return CountingScalar(abs(self.value))

    def __eq__(self, other):
        return self.value == _val(other)

    def __ne__(self, other):
        return self.value != _val(other)

    def __lt__(self, other):
        return self.value < _val(other)

    def __le__(self, other):
        return self.value <= _val(other)

    def __gt__(self, other):
        return self.value > _val(other)

    def __ge__(self, other):
        return self.value >= _val(other)

    def __float__(self):
        return self.value

    def __hash__(self):
        return hash(self.value)

    def __repr__(self):
        return f"CountingScalar({self.value!r})"
