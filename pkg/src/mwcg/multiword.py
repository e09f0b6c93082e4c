"""Double-word and triple-word arithmetic, with quasi variants.

A value is an unevaluated sum of two (:class:`DoubleWord`) or three
(:class:`TripleWord`) FP64 components.  The normalized forms keep components
non-overlapping (``fl(w0+w1) = w0``, and for triples ``fl(w1+w2) = w1``); the
quasi variants of the operations skip the renormalization step, trading a
bounded accuracy loss for fewer FP64 operations.  Whether a given value is
normalized is a contract between producer and consumer, not a runtime tag.

All operations are pure and written against the generic scalar interface of
:mod:`mwcg.eft`, so they run identically on plain floats and on the
instrumented counting scalar used by the operation-count tests.
"""

import math
from typing import NamedTuple

from .eft import fma, quick_two_sum, two_prod_fma, two_sum

__all__ = [
    "DoubleWord",
    "TripleWord",
    "dw_add", "dw_mul", "dw_neg", "dw_sub", "dw_div",
    "qdw_add", "qdw_mul", "qdw_div",
    "tw_add", "tw_mul", "tw_neg", "tw_sub", "tw_div",
    "qtw_add", "qtw_mul", "qtw_div",
    "dxdw_add", "dxdw_mul", "dxqdw_add", "dxqdw_mul",
    "dxtw_add", "dxtw_mul", "dxqtw_add", "dxqtw_mul",
    "normalize_dw", "normalize_tw",
    "dw_from_fp64", "tw_from_fp64", "dw_to_fp64", "tw_to_fp64",
]


class DoubleWord(NamedTuple):
    """High/low FP64 pair; the represented value is ``w0 + w1``."""

    w0: float
    w1: float

    def to_hex(self):
        return f"{self.w0.hex()} {self.w1.hex()}"

    @classmethod
    def from_hex(cls, text):
        a, b = text.split()
        return cls(float.fromhex(a), float.fromhex(b))

    def decimal_str(self, digits=40):
        from .oracle import ExactValue
        v = ExactValue.from_fp64(self.w0).add(ExactValue.from_fp64(self.w1))
        return v.decimal_str(digits)


class TripleWord(NamedTuple):
    """Three FP64 components in descending significance; value ``w0+w1+w2``."""

    w0: float
    w1: float
    w2: float

    def to_hex(self):
        return f"{self.w0.hex()} {self.w1.hex()} {self.w2.hex()}"

    @classmethod
    def from_hex(cls, text):
        a, b, c = text.split()
        return cls(float.fromhex(a), float.fromhex(b), float.fromhex(c))

    def decimal_str(self, digits=60):
        from .oracle import ExactValue
        v = ExactValue.from_fp64(self.w0).add(ExactValue.from_fp64(self.w1))
        v = v.add(ExactValue.from_fp64(self.w2))
        return v.decimal_str(digits)


# ---------------------------------------------------------------------------
# Conversions
# ---------------------------------------------------------------------------

def dw_from_fp64(x):
    return DoubleWord(x, 0.0)


def tw_from_fp64(x):
    return TripleWord(x, 0.0, 0.0)


def dw_to_fp64(a):
    """Collapse to FP64, summing high to low."""
    return a.w0 + a.w1


def tw_to_fp64(a):
    return (a.w0 + a.w1) + a.w2


# ---------------------------------------------------------------------------
# Double-word add / mul
# ---------------------------------------------------------------------------

def dw_add(a, b):
    """Normalized double-word addition.  11 FP64 operations."""
    s, e = two_sum(a.w0, b.w0)
    e = (e + a.w1) + b.w1
    return DoubleWord(*quick_two_sum(s, e))


def dw_mul(a, b):
    """Normalized double-word multiplication.  7 FP64 operations."""
    p, e = two_prod_fma(a.w0, b.w0)
    e = fma(a.w0, b.w1, e)
    e = fma(a.w1, b.w0, e)
    return DoubleWord(*quick_two_sum(p, e))


def qdw_add(a, b):
    """Quasi double-word addition: dw_add minus renormalization.  8 ops."""
    s, e = two_sum(a.w0, b.w0)
    e = (e + a.w1) + b.w1
    return DoubleWord(s, e)


def qdw_mul(a, b):
    """Quasi double-word multiplication: dw_mul minus renormalization.  4 ops."""
    p, e = two_prod_fma(a.w0, b.w0)
    e = fma(a.w0, b.w1, e)
    e = fma(a.w1, b.w0, e)
    return DoubleWord(p, e)


def dw_neg(a):
    return DoubleWord(-a.w0, -a.w1)


def dw_sub(a, b):
    return dw_add(a, dw_neg(b))


# ---------------------------------------------------------------------------
# Mixed FP64 x double-word
# ---------------------------------------------------------------------------
# Derived from the full-width operations by zeroing the absent low word and
# deleting the operations that become dead.

def dxdw_add(a, b):
    """FP64 + double-word, normalized.  Matches dw_add((a,0), b) componentwise."""
    s, e = two_sum(a, b.w0)
    e = e + b.w1
    return DoubleWord(*quick_two_sum(s, e))


def dxqdw_add(a, b):
    s, e = two_sum(a, b.w0)
    e = e + b.w1
    return DoubleWord(s, e)


def dxdw_mul(a, b):
    """FP64 * double-word, normalized.  Matches dw_mul((a,0), b) componentwise."""
    p, e = two_prod_fma(a, b.w0)
    e = fma(a, b.w1, e)
    return DoubleWord(*quick_two_sum(p, e))


def dxqdw_mul(a, b):
    p, e = two_prod_fma(a, b.w0)
    e = fma(a, b.w1, e)
    return DoubleWord(p, e)


# ---------------------------------------------------------------------------
# Renormalization helpers (error-free summation chains)
# ---------------------------------------------------------------------------

def _vec_sum(z):
    """Chained two_sum pass: same exact sum, leading term is fl(sum)."""
    n = len(z)
    e = [None] * n
    s = z[n - 1]
    for i in range(n - 2, -1, -1):
        s, err = two_sum(z[i], s)
        e[i + 1] = err
    e[0] = s
    return e


def _vec_sum_err_branch(e, m):
    """Compress an error-free chain into at most m non-overlapping words."""
    r = [0.0] * m
    j = 0
    eps = e[0]
    for i in range(len(e) - 1):
        rj, eps_next = two_sum(eps, e[i + 1])
        if eps_next != 0.0:
            r[j] = rj
            if j == m - 1:
                return r
            j += 1
            eps = eps_next
        else:
            eps = rj
    r[j] = eps
    return r


def _merge_desc(a, b):
    """Merge two magnitude-descending tuples into one descending list."""
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        if abs(a[i]) >= abs(b[j]):
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return out


# ---------------------------------------------------------------------------
# Triple-word add / mul (normalized)
# ---------------------------------------------------------------------------
# The triple-word bodies follow the merge / error-free-summation /
# branch-compression structure of the reference triple-word algorithms
# (fast multiplication variant).  The branches make these operations
# scalar-friendly rather than lane-parallel; that trade is accepted.

def tw_add(a, b):
    """Normalized triple-word addition."""
    z = _merge_desc(tuple(a), tuple(b))
    e = _vec_sum(z)
    c = _vec_sum_err_branch(e, 3)
    return TripleWord(c[0], c[1], c[2])


def tw_mul(a, b):
    """Normalized triple-word multiplication (fast variant).

    The three significant partial products are formed error-free; every
    third-order term is folded into the last word with fused multiply-adds;
    the result is then compressed to non-overlapping words.
    """
    c1, e1 = two_prod_fma(a.w0, b.w0)
    t2, e2 = two_prod_fma(a.w0, b.w1)
    t3, e3 = two_prod_fma(a.w1, b.w0)
    c2, e4 = two_sum(t2, t3)
    c2, e5 = two_sum(c2, e1)
    c3 = fma(a.w1, b.w1, fma(a.w2, b.w0, e2) + fma(a.w0, b.w2, e3)) + (e4 + e5)
    c = _vec_sum_err_branch(_vec_sum([c1, c2, c3]), 3)
    return TripleWord(c[0], c[1], c[2])


def tw_neg(a):
    return TripleWord(-a.w0, -a.w1, -a.w2)


def tw_sub(a, b):
    return tw_add(a, tw_neg(b))


# ---------------------------------------------------------------------------
# Quasi triple-word add / mul
# ---------------------------------------------------------------------------

def qtw_add(a, b):
    """Quasi triple-word addition.  21 FP64 operations."""
    c1, e1 = two_sum(a.w0, b.w0)
    c2, e2 = two_sum(a.w1, b.w1)
    c2, e3 = two_sum(c2, e1)
    c3 = ((a.w2 + b.w2) + e2) + e3
    return TripleWord(c1, c2, c3)


def qtw_mul(a, b):
    """Quasi triple-word multiplication.  24 FP64 operations."""
    c1, e1 = two_prod_fma(a.w0, b.w0)
    t2, e2 = two_prod_fma(a.w0, b.w1)
    t3, e3 = two_prod_fma(a.w1, b.w0)
    c2, e4 = two_sum(t2, t3)
    c2, e5 = two_sum(c2, e1)
    c3 = ((fma(a.w2, b.w0, e2) + fma(a.w1, b.w1, e3)) + fma(a.w0, b.w2, e4)) + e5
    return TripleWord(c1, c2, c3)


# ---------------------------------------------------------------------------
# Mixed FP64 x triple-word
# ---------------------------------------------------------------------------

def dxqtw_mul(a, b):
    """FP64 * quasi triple-word: the reduced-width multiplication."""
    c1, e1 = two_prod_fma(a, b.w0)
    c2, e2 = two_prod_fma(a, b.w1)
    c2, e5 = two_sum(c2, e1)
    c3 = fma(a, b.w2, e2) + e5
    return TripleWord(c1, c2, c3)


def dxqtw_add(a, b):
    """FP64 + quasi triple-word; agrees with qtw_add((a,0,0), b) componentwise."""
    c1, e1 = two_sum(a, b.w0)
    c2, e3 = two_sum(b.w1, e1)
    c3 = b.w2 + e3
    return TripleWord(c1, c2, c3)


def dxtw_add(a, b):
    """FP64 + triple-word, normalized."""
    z = _merge_desc((a,), tuple(b))
    e = _vec_sum(z)
    c = _vec_sum_err_branch(e, 3)
    return TripleWord(c[0], c[1], c[2])


def dxtw_mul(a, b):
    """FP64 * triple-word, normalized."""
    c1, e1 = two_prod_fma(a, b.w0)
    c2, e2 = two_prod_fma(a, b.w1)
    c2, e5 = two_sum(c2, e1)
    c3 = fma(a, b.w2, e2) + e5
    c = _vec_sum_err_branch(_vec_sum([c1, c2, c3]), 3)
    return TripleWord(c[0], c[1], c[2])


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def normalize_dw(a):
    """Re-express as non-overlapping words; the value is preserved exactly.

    QuickTwoSum when the magnitude ordering permits it, the unconditional
    error-free TwoSum otherwise (both agree whenever |w0| >= |w1|).
    """
    if abs(a.w0) >= abs(a.w1):
        return DoubleWord(*quick_two_sum(a.w0, a.w1))
    return DoubleWord(*two_sum(a.w0, a.w1))


def normalize_tw(a):
    """VecSum3: two chained error-free sums.

    Reduces overlap without guaranteeing strict non-overlap; the value is
    preserved exactly.
    """
    c1, c2 = two_sum(a.w0, a.w1)
    c2, c3 = two_sum(c2, a.w2)
    return TripleWord(c1, c2, c3)


# ---------------------------------------------------------------------------
# Division
# ---------------------------------------------------------------------------
# No division algorithm accompanies the add/mul set, so this is standard
# high-word-quotient long division: divide the leading words, subtract the
# partial product, repeat for one word beyond the output width, then compress
# the quotient words.

def _ieee_div(x, y):
    # Python raises on float division by zero; kernels need IEEE semantics.
    try:
        return x / y
    except ZeroDivisionError:
        if x != x or x == 0.0:
            return math.nan
        return math.copysign(math.inf, x) * math.copysign(1.0, y)


def dw_div(a, b):
    """Double-word division; relative error within a few ulps of dw_mul's."""
    bn = normalize_dw(b)
    if dw_to_fp64(bn) == 0.0:
        return DoubleWord(_ieee_div(dw_to_fp64(a), dw_to_fp64(bn)), 0.0)
    r = a
    q = []
    for _ in range(3):
        qi = r.w0 / bn.w0
        q.append(qi)
        r = dw_add(r, dw_neg(dxdw_mul(qi, bn)))
    c = _vec_sum_err_branch(_vec_sum(q), 2)
    return DoubleWord(c[0], c[1])


def tw_div(a, b):
    """Triple-word division with one correction word beyond the output width."""
    bn = _strict_normalize_tw(b)
    if tw_to_fp64(bn) == 0.0:
        return TripleWord(_ieee_div(tw_to_fp64(a), tw_to_fp64(bn)), 0.0, 0.0)
    r = a
    q = []
    for _ in range(4):
        qi = r.w0 / bn.w0
        q.append(qi)
        r = tw_add(r, tw_neg(dxtw_mul(qi, bn)))
    c = _vec_sum_err_branch(_vec_sum(q), 3)
    return TripleWord(c[0], c[1], c[2])


def _strict_normalize_tw(a):
    c = _vec_sum_err_branch(_vec_sum(list(a)), 3)
    return TripleWord(c[0], c[1], c[2])


# The quasi modes reuse the normalized divisions: scalar division sits outside
# the hot kernels, a normalized result is a valid quasi value, and this keeps
# the 4x-of-multiplication error target with no extra algorithm.
qdw_div = dw_div
qtw_div = tw_div
