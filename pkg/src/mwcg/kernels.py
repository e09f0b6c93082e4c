"""Vectors and BLAS-style kernels over the five arithmetics.

Vectors are stored as contiguous arrays-of-structures: one FP64 record per
element holding the element's words.  The matrix stays FP64 everywhere; it
enters multi-word arithmetic through the mixed FP64-times-multiword
operations, while accumulators and vector elements are full multi-word.

Every kernel exists twice: a compiled fast path (:mod:`mwcg._fast`) and a
pure-Python reference built directly from the scalar operations.  The two are
bitwise identical; tests rely on that to validate the compiled path.
"""

import numpy as np

from . import _fast, multiword as mw

__all__ = [
    "MODES",
    "MultiwordVector",
    "spmv",
    "dot",
    "axpy",
    "scal_then_add",
    "residual",
    "norm2_fp64",
    "norm_metrics_tw",
    "normalize_vector",
    "mode_words",
    "scalar_one",
    "scalar_neg",
    "scalar_div",
    "scalar_to_fp64",
]

MODES = ("fp64", "dw", "qdw", "tw", "qtw")

_WORDS = {"fp64": 1, "dw": 2, "qdw": 2, "tw": 3, "qtw": 3}

_DTYPE2 = np.dtype([("w0", "<f8"), ("w1", "<f8")])
_DTYPE3 = np.dtype([("w0", "<f8"), ("w1", "<f8"), ("w2", "<f8")])


def mode_words(mode):
    if mode not in _WORDS:
        raise ValueError(f"unknown arithmetic mode {mode!r}")
    return _WORDS[mode]


class MultiwordVector:
    """Fixed-length vector of FP64 / double-word / triple-word elements."""

    def __init__(self, mode, length):
        words = mode_words(mode)
        self.mode = mode
        if words == 1:
            self._data = np.zeros(length)
        elif words == 2:
            self._data = np.zeros(length, dtype=_DTYPE2)
        else:
            self._data = np.zeros(length, dtype=_DTYPE3)

    @classmethod
    def from_fp64(cls, values, mode):
        values = np.asarray(values, dtype=np.float64)
        v = cls(mode, values.size)
        v.words[0][:] = values
        return v

    @property
    def words(self):
        """Views of the word planes (w0 highest)."""
        if self.mode == "fp64":
            return (self._data,)
        return tuple(self._data[name] for name in self._data.dtype.names)

    def __len__(self):
        return int(self._data.size)

    def to_fp64(self):
        """Collapse each element, summing words high to low."""
        ws = self.words
        out = ws[0].copy()
        for w in ws[1:]:
            out += w
        return out

    def copy(self):
        v = MultiwordVector(self.mode, len(self))
        v._data[:] = self._data
        return v

    def element(self, i):
        ws = self.words
        if self.mode == "fp64":
            return float(ws[0][i])
        if len(ws) == 2:
            return mw.DoubleWord(float(ws[0][i]), float(ws[1][i]))
        return mw.TripleWord(float(ws[0][i]), float(ws[1][i]), float(ws[2][i]))

    def set_element(self, i, value):
        if self.mode == "fp64":
            self.words[0][i] = value
            return
        for w, c in zip(self.words, value):
            w[i] = c

    def promote_tw(self):
        """Copy into a triple-word vector (exact; zero-fills absent words)."""
        v = MultiwordVector("tw", len(self))
        for w_dst, w_src in zip(v.words, self.words):
            w_dst[:] = w_src
        return v


# ---------------------------------------------------------------------------
# Scalar helpers for the solver (alpha, beta, rho live in the mode's type)
# ---------------------------------------------------------------------------

def scalar_one(mode):
    w = mode_words(mode)
    return 1.0 if w == 1 else (mw.DoubleWord(1.0, 0.0) if w == 2
                               else mw.TripleWord(1.0, 0.0, 0.0))


def scalar_neg(mode, a):
    if mode == "fp64":
        return -a
    return mw.dw_neg(a) if mode_words(mode) == 2 else mw.tw_neg(a)


def scalar_div(mode, a, b):
    if mode == "fp64":
        return mw._ieee_div(a, b)
    if mode in ("dw", "qdw"):
        return mw.dw_div(a, b)
    return mw.tw_div(a, b)


def scalar_to_fp64(mode, a):
    if mode == "fp64":
        return a
    return mw.dw_to_fp64(a) if mode_words(mode) == 2 else mw.tw_to_fp64(a)


_SCALAR_OPS = {
    "dw": (mw.dw_add, mw.dw_mul, mw.dxdw_mul, mw.dxdw_add, None),
    "qdw": (mw.qdw_add, mw.qdw_mul, mw.dxqdw_mul, mw.dxqdw_add, mw.normalize_dw),
    "tw": (mw.tw_add, mw.tw_mul, mw.dxtw_mul, mw.dxtw_add, None),
    "qtw": (mw.qtw_add, mw.qtw_mul, mw.dxqtw_mul, mw.dxqtw_add, mw.normalize_tw),
}


def _zero(mode):
    w = mode_words(mode)
    return mw.DoubleWord(0.0, 0.0) if w == 2 else mw.TripleWord(0.0, 0.0, 0.0)


def _bounds(n, partitions):
    if partitions < 1:
        raise ValueError("partition count must be >= 1")
    return np.array([n * p // partitions for p in range(partitions + 1)],
                    dtype=np.int64)


def _check_len(a, b):
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

def spmv(A, x, out=None, reference=False):
    """y = A x with full multi-word accumulation; rows are independent.

    The matrix values enter through the mixed FP64-by-multiword multiply.
    Accumulation order within a row is fixed left to right, so any row
    partitioning is bitwise identical to the sequential run.
    """
    if A.n_cols != len(x):
        raise ValueError(f"dimension mismatch: matrix has {A.n_cols} columns, "
                         f"vector has {len(x)} elements")
    if out is None:
        out = MultiwordVector(x.mode, A.n_rows)
    if reference and x.mode != "fp64":
        add, _, dxmul, _, _ = _SCALAR_OPS[x.mode]
        for i in range(A.n_rows):
            acc = _zero(x.mode)
            for k in range(A.row_ptr[i], A.row_ptr[i + 1]):
                acc = add(acc, dxmul(float(A.values[k]),
                                     x.element(int(A.col_idx[k]))))
            out.set_element(i, acc)
        return out
    _fast.KERNELS[x.mode]["spmv"](A.row_ptr, A.col_idx, A.values,
                                  *x.words, *out.words)
    return out


def dot(x, y, partitions=1, reference=False):
    """Sum of elementwise products in the mode's arithmetic.

    Per-partition sequential accumulation, then a sequential combine in
    ascending partition index; partitions=1 is the plain sequential
    specification.  Bitwise reproducible for a fixed partition count.
    """
    _check_len(x, y)
    if x.mode != y.mode:
        raise ValueError("dot operands must share a mode")
    bounds = _bounds(len(x), partitions)
    if reference and x.mode != "fp64":
        add, mul, _, _, _ = _SCALAR_OPS[x.mode]
        total = None
        for p in range(partitions):
            part = _zero(x.mode)
            for i in range(bounds[p], bounds[p + 1]):
                part = add(part, mul(x.element(i), y.element(i)))
            total = part if total is None else add(total, part)
        return total if total is not None else _zero(x.mode)
    res = _fast.KERNELS[x.mode]["dot"](*x.words, *y.words, bounds)
    if x.mode == "fp64":
        return float(res)
    return mw.DoubleWord(*res) if len(res) == 2 else mw.TripleWord(*res)


def axpy(alpha, x, y, reference=False):
    """y <- y + alpha * x, elementwise in the mode's arithmetic (in place)."""
    _check_len(x, y)
    if reference and x.mode != "fp64":
        add, mul, _, _, _ = _SCALAR_OPS[x.mode]
        for i in range(len(x)):
            y.set_element(i, add(y.element(i), mul(alpha, x.element(i))))
        return y
    if x.mode == "fp64":
        _fast.KERNELS["fp64"]["axpy"](alpha, x.words[0], y.words[0])
        return y
    _fast.KERNELS[x.mode]["axpy"](*alpha, *x.words, *y.words)
    return y


def scal_then_add(beta, p, r, reference=False):
    """p <- r + beta * p (in place on p)."""
    _check_len(p, r)
    if reference and p.mode != "fp64":
        add, mul, _, _, _ = _SCALAR_OPS[p.mode]
        for i in range(len(p)):
            p.set_element(i, add(r.element(i), mul(beta, p.element(i))))
        return p
    if p.mode == "fp64":
        _fast.KERNELS["fp64"]["scal_add"](beta, p.words[0], r.words[0])
        return p
    _fast.KERNELS[p.mode]["scal_add"](*beta, *p.words, *r.words)
    return p


def residual(b, q, out=None, reference=False):
    """r = b - q for an FP64 right-hand side and a multi-word q."""
    b = np.asarray(b, dtype=np.float64)
    if b.size != len(q):
        raise ValueError("dimension mismatch in residual")
    if out is None:
        out = MultiwordVector(q.mode, len(q))
    if reference and q.mode != "fp64":
        _, _, _, dxadd, _ = _SCALAR_OPS[q.mode]
        neg = mw.dw_neg if mode_words(q.mode) == 2 else mw.tw_neg
        for i in range(len(q)):
            out.set_element(i, dxadd(float(b[i]), neg(q.element(i))))
        return out
    _fast.KERNELS[q.mode]["residual"](b, *q.words, *out.words)
    return out


def normalize_vector(v, reference=False):
    """Elementwise renormalization for quasi vectors (no-op otherwise).

    Value-preserving: QuickTwoSum for two-word elements, VecSum3 for
    three-word elements.
    """
    if v.mode not in ("qdw", "qtw"):
        return v
    if reference:
        norm = _SCALAR_OPS[v.mode][4]
        for i in range(len(v)):
            v.set_element(i, norm(v.element(i)))
        return v
    _fast.KERNELS[v.mode]["normalize"](*v.words)
    return v


def norm2_fp64(x):
    """FP64 2-norm of the collapsed vector (sequential FP64 accumulation)."""
    ws = x.words if isinstance(x, MultiwordVector) else \
        (np.asarray(x, dtype=np.float64),)
    fn = {1: _fast.sumsq_collapsed_1, 2: _fast.sumsq_collapsed_2,
          3: _fast.sumsq_collapsed_3}[len(ws)]
    return float(np.sqrt(fn(*ws)))


def _tw_norm_sq(v):
    """Triple-word accumulated sum of squares, collapsed to FP64."""
    s = dot(v, v)
    return mw.tw_to_fp64(s)


def norm_metrics_tw(x, x_star, A, b):
    """Relative error norm and true relative residual norm, both accumulated
    in triple-word arithmetic and collapsed to FP64 at the very end.

    Reporting only; these never feed the stopping test.
    """
    if A.n_cols != len(x):
        raise ValueError("dimension mismatch in norm metrics")
    xt = x.promote_tw()
    b = np.asarray(b, dtype=np.float64)
    bt = MultiwordVector.from_fp64(b, "tw")

    q = spmv(A, xt)
    res = residual(b, q)
    bnorm_sq = _tw_norm_sq(bt) or 1.0
    true_residual = float(np.sqrt(_tw_norm_sq(res) / bnorm_sq))

    error_norm = None
    if x_star is not None:
        x_star = np.asarray(x_star, dtype=np.float64)
        diff = residual(x_star, xt)  # x* - x, same norm as x - x*
        xs_sq = _tw_norm_sq(MultiwordVector.from_fp64(x_star, "tw")) or 1.0
        error_norm = float(np.sqrt(_tw_norm_sq(diff) / xs_sq))
    return error_norm, true_residual
