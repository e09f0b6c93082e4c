"""Compiled kernels for the vector operations.

Mirrors of the scalar algorithms in :mod:`mwcg.multiword`, specialized per
arithmetic mode and compiled with numba.  The fused multiply-add is emitted
as the llvm.fma intrinsic, which lowers to the hardware FMA instruction (or a
correctly rounded libm call), so results here are bitwise identical to the
pure-Python reference path; tests assert exactly that.

Each kernel fixes its accumulation order (left-to-right within a row for
SpMV, per-partition sequential then ascending-partition combine for DOT), so
results are bitwise reproducible for a fixed partition count.
"""

import numpy as np
from llvmlite import ir
from numba import njit, types
from numba.extending import intrinsic

__all__ = ["KERNELS"]


@intrinsic
def fma(typingctx, a, b, c):
    """a*b + c with a single rounding (llvm.fma.f64)."""
    sig = types.float64(types.float64, types.float64, types.float64)

    def codegen(context, builder, signature, args):
        fn = builder.module.globals.get("llvm.fma.f64")
        if fn is None:
            fnty = ir.FunctionType(ir.DoubleType(), [ir.DoubleType()] * 3)
            fn = ir.Function(builder.module, fnty, "llvm.fma.f64")
        return builder.call(fn, args)

    return sig, codegen


# ---------------------------------------------------------------------------
# Scalar building blocks (always inlined)
# ---------------------------------------------------------------------------

@njit(inline="always", cache=True)
def _two_sum(a, b):
    x = a + b
    z = x - a
    y = (a - (x - z)) + (b - z)
    return x, y


@njit(inline="always", cache=True)
def _quick_two_sum(a, b):
    x = a + b
    y = (a - x) + b
    return x, y


@njit(inline="always", cache=True)
def _two_prod(a, b):
    x = a * b
    y = fma(a, b, -x)
    return x, y


@njit(inline="always", cache=True)
def _dw_add(a0, a1, b0, b1):
    s, e = _two_sum(a0, b0)
    e = (e + a1) + b1
    return _quick_two_sum(s, e)


@njit(inline="always", cache=True)
def _qdw_add(a0, a1, b0, b1):
    s, e = _two_sum(a0, b0)
    e = (e + a1) + b1
    return s, e


@njit(inline="always", cache=True)
def _dw_mul(a0, a1, b0, b1):
    p, e = _two_prod(a0, b0)
    e = fma(a0, b1, e)
    e = fma(a1, b0, e)
    return _quick_two_sum(p, e)


@njit(inline="always", cache=True)
def _qdw_mul(a0, a1, b0, b1):
    p, e = _two_prod(a0, b0)
    e = fma(a0, b1, e)
    e = fma(a1, b0, e)
    return p, e


@njit(inline="always", cache=True)
def _dxdw_mul(a, b0, b1):
    p, e = _two_prod(a, b0)
    e = fma(a, b1, e)
    return _quick_two_sum(p, e)


@njit(inline="always", cache=True)
def _dxqdw_mul(a, b0, b1):
    p, e = _two_prod(a, b0)
    e = fma(a, b1, e)
    return p, e


@njit(inline="always", cache=True)
def _dxdw_add(a, b0, b1):
    s, e = _two_sum(a, b0)
    e = e + b1
    return _quick_two_sum(s, e)


@njit(inline="always", cache=True)
def _dxqdw_add(a, b0, b1):
    s, e = _two_sum(a, b0)
    e = e + b1
    return s, e


@njit(inline="always", cache=True)
def _norm_dw(a0, a1):
    # value-preserving even when the words are out of order
    if abs(a0) >= abs(a1):
        return _quick_two_sum(a0, a1)
    return _two_sum(a0, a1)


@njit(inline="always", cache=True)
def _vecsum3(a0, a1, a2):
    c0, c1 = _two_sum(a0, a1)
    c1, c2 = _two_sum(c1, a2)
    return c0, c1, c2


@njit(inline="always", cache=True)
def _vseb3(e, n):
    """Compress the error-free chain e[:n] into three words."""
    r0 = 0.0
    r1 = 0.0
    r2 = 0.0
    j = 0
    eps = e[0]
    for i in range(n - 1):
        rj, eps_next = _two_sum(eps, e[i + 1])
        if eps_next != 0.0:
            if j == 0:
                r0 = rj
            elif j == 1:
                r1 = rj
            else:
                return r0, r1, rj
            j += 1
            eps = eps_next
        else:
            eps = rj
    if j == 0:
        r0 = eps
    elif j == 1:
        r1 = eps
    else:
        r2 = eps
    return r0, r1, r2


@njit(inline="always", cache=True)
def _renorm3(c0, c1, c2):
    z = np.empty(3)
    s = c2
    s, e2 = _two_sum(c1, s)
    s, e1 = _two_sum(c0, s)
    z[0] = s
    z[1] = e1
    z[2] = e2
    return _vseb3(z, 3)


@njit(inline="always", cache=True)
def _tw_add(a0, a1, a2, b0, b1, b2):
    av = (a0, a1, a2)
    bv = (b0, b1, b2)
    z = np.empty(6)
    i = 0
    j = 0
    for k in range(6):
        if i < 3 and (j >= 3 or abs(av[i]) >= abs(bv[j])):
            z[k] = av[i]
            i += 1
        else:
            z[k] = bv[j]
            j += 1
    s = z[5]
    e = np.empty(6)
    for k in range(4, -1, -1):
        s, err = _two_sum(z[k], s)
        e[k + 1] = err
    e[0] = s
    return _vseb3(e, 6)


@njit(inline="always", cache=True)
def _qtw_add(a0, a1, a2, b0, b1, b2):
    c0, e1 = _two_sum(a0, b0)
    c1, e2 = _two_sum(a1, b1)
    c1, e3 = _two_sum(c1, e1)
    c2 = ((a2 + b2) + e2) + e3
    return c0, c1, c2


@njit(inline="always", cache=True)
def _tw_mul(a0, a1, a2, b0, b1, b2):
    c0, e1 = _two_prod(a0, b0)
    t2, e2 = _two_prod(a0, b1)
    t3, e3 = _two_prod(a1, b0)
    c1, e4 = _two_sum(t2, t3)
    c1, e5 = _two_sum(c1, e1)
    c2 = fma(a1, b1, fma(a2, b0, e2) + fma(a0, b2, e3)) + (e4 + e5)
    return _renorm3(c0, c1, c2)


@njit(inline="always", cache=True)
def _qtw_mul(a0, a1, a2, b0, b1, b2):
    c0, e1 = _two_prod(a0, b0)
    t2, e2 = _two_prod(a0, b1)
    t3, e3 = _two_prod(a1, b0)
    c1, e4 = _two_sum(t2, t3)
    c1, e5 = _two_sum(c1, e1)
    c2 = ((fma(a2, b0, e2) + fma(a1, b1, e3)) + fma(a0, b2, e4)) + e5
    return c0, c1, c2


@njit(inline="always", cache=True)
def _dxqtw_mul(a, b0, b1, b2):
    c0, e1 = _two_prod(a, b0)
    c1, e2 = _two_prod(a, b1)
    c1, e5 = _two_sum(c1, e1)
    c2 = fma(a, b2, e2) + e5
    return c0, c1, c2


@njit(inline="always", cache=True)
def _dxtw_mul(a, b0, b1, b2):
    c0, e1 = _two_prod(a, b0)
    c1, e2 = _two_prod(a, b1)
    c1, e5 = _two_sum(c1, e1)
    c2 = fma(a, b2, e2) + e5
    return _renorm3(c0, c1, c2)


@njit(inline="always", cache=True)
def _dxqtw_add(a, b0, b1, b2):
    c0, e1 = _two_sum(a, b0)
    c1, e3 = _two_sum(b1, e1)
    c2 = b2 + e3
    return c0, c1, c2


@njit(inline="always", cache=True)
def _dxtw_add(a, b0, b1, b2):
    bv = (b0, b1, b2)
    z = np.empty(4)
    i = 0
    j = 0
    for k in range(4):
        if i < 1 and (j >= 3 or abs(a) >= abs(bv[j])):
            z[k] = a
            i += 1
        else:
            z[k] = bv[j]
            j += 1
    s = z[3]
    e = np.empty(4)
    for k in range(2, -1, -1):
        s, err = _two_sum(z[k], s)
        e[k + 1] = err
    e[0] = s
    return _vseb3(e, 4)


# ---------------------------------------------------------------------------
# FP64 kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def spmv_fp64(row_ptr, col_idx, vals, x0, y0):
    for i in range(row_ptr.size - 1):
        s = 0.0
        for k in range(row_ptr[i], row_ptr[i + 1]):
            s = s + vals[k] * x0[col_idx[k]]
        y0[i] = s


@njit(cache=True)
def dot_fp64(x0, y0, bounds):
    s = 0.0
    for p in range(bounds.size - 1):
        t = 0.0
        for i in range(bounds[p], bounds[p + 1]):
            t = t + x0[i] * y0[i]
        if p == 0:
            s = t
        else:
            s = s + t
    return s


@njit(cache=True)
def axpy_fp64(a0, x0, y0):
    for i in range(x0.size):
        y0[i] = y0[i] + a0 * x0[i]


@njit(cache=True)
def scal_add_fp64(b0, p0, r0):
    for i in range(p0.size):
        p0[i] = r0[i] + b0 * p0[i]


@njit(cache=True)
def residual_fp64(b, q0, r0):
    for i in range(b.size):
        r0[i] = b[i] + (-q0[i])


# ---------------------------------------------------------------------------
# Double-word kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def spmv_dw(row_ptr, col_idx, vals, x0, x1, y0, y1):
    for i in range(row_ptr.size - 1):
        s0 = 0.0
        s1 = 0.0
        for k in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[k]
            p0, p1 = _dxdw_mul(vals[k], x0[j], x1[j])
            s0, s1 = _dw_add(s0, s1, p0, p1)
        y0[i] = s0
        y1[i] = s1


@njit(cache=True)
def dot_dw(x0, x1, y0, y1, bounds):
    s0 = 0.0
    s1 = 0.0
    for p in range(bounds.size - 1):
        t0 = 0.0
        t1 = 0.0
        for i in range(bounds[p], bounds[p + 1]):
            m0, m1 = _dw_mul(x0[i], x1[i], y0[i], y1[i])
            t0, t1 = _dw_add(t0, t1, m0, m1)
        if p == 0:
            s0, s1 = t0, t1
        else:
            s0, s1 = _dw_add(s0, s1, t0, t1)
    return s0, s1


@njit(cache=True)
def axpy_dw(a0, a1, x0, x1, y0, y1):
    for i in range(x0.size):
        m0, m1 = _dw_mul(a0, a1, x0[i], x1[i])
        y0[i], y1[i] = _dw_add(y0[i], y1[i], m0, m1)


@njit(cache=True)
def scal_add_dw(b0, b1, p0, p1, r0, r1):
    for i in range(p0.size):
        m0, m1 = _dw_mul(b0, b1, p0[i], p1[i])
        p0[i], p1[i] = _dw_add(r0[i], r1[i], m0, m1)


@njit(cache=True)
def residual_dw(b, q0, q1, r0, r1):
    for i in range(b.size):
        r0[i], r1[i] = _dxdw_add(b[i], -q0[i], -q1[i])


# ---------------------------------------------------------------------------
# Quasi double-word kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def spmv_qdw(row_ptr, col_idx, vals, x0, x1, y0, y1):
    for i in range(row_ptr.size - 1):
        s0 = 0.0
        s1 = 0.0
        for k in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[k]
            p0, p1 = _dxqdw_mul(vals[k], x0[j], x1[j])
            s0, s1 = _qdw_add(s0, s1, p0, p1)
        y0[i] = s0
        y1[i] = s1


@njit(cache=True)
def dot_qdw(x0, x1, y0, y1, bounds):
    s0 = 0.0
    s1 = 0.0
    for p in range(bounds.size - 1):
        t0 = 0.0
        t1 = 0.0
        for i in range(bounds[p], bounds[p + 1]):
            m0, m1 = _qdw_mul(x0[i], x1[i], y0[i], y1[i])
            t0, t1 = _qdw_add(t0, t1, m0, m1)
        if p == 0:
            s0, s1 = t0, t1
        else:
            s0, s1 = _qdw_add(s0, s1, t0, t1)
    return s0, s1


@njit(cache=True)
def axpy_qdw(a0, a1, x0, x1, y0, y1):
    for i in range(x0.size):
        m0, m1 = _qdw_mul(a0, a1, x0[i], x1[i])
        y0[i], y1[i] = _qdw_add(y0[i], y1[i], m0, m1)


@njit(cache=True)
def scal_add_qdw(b0, b1, p0, p1, r0, r1):
    for i in range(p0.size):
        m0, m1 = _qdw_mul(b0, b1, p0[i], p1[i])
        p0[i], p1[i] = _qdw_add(r0[i], r1[i], m0, m1)


@njit(cache=True)
def residual_qdw(b, q0, q1, r0, r1):
    for i in range(b.size):
        r0[i], r1[i] = _dxqdw_add(b[i], -q0[i], -q1[i])


@njit(cache=True)
def normalize_arr_qdw(w0, w1):
    for i in range(w0.size):
        w0[i], w1[i] = _norm_dw(w0[i], w1[i])


# ---------------------------------------------------------------------------
# Triple-word kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def spmv_tw(row_ptr, col_idx, vals, x0, x1, x2, y0, y1, y2):
    for i in range(row_ptr.size - 1):
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        for k in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[k]
            p0, p1, p2 = _dxtw_mul(vals[k], x0[j], x1[j], x2[j])
            s0, s1, s2 = _tw_add(s0, s1, s2, p0, p1, p2)
        y0[i] = s0
        y1[i] = s1
        y2[i] = s2


@njit(cache=True)
def dot_tw(x0, x1, x2, y0, y1, y2, bounds):
    s0 = 0.0
    s1 = 0.0
    s2 = 0.0
    for p in range(bounds.size - 1):
        t0 = 0.0
        t1 = 0.0
        t2 = 0.0
        for i in range(bounds[p], bounds[p + 1]):
            m0, m1, m2 = _tw_mul(x0[i], x1[i], x2[i], y0[i], y1[i], y2[i])
            t0, t1, t2 = _tw_add(t0, t1, t2, m0, m1, m2)
        if p == 0:
            s0, s1, s2 = t0, t1, t2
        else:
            s0, s1, s2 = _tw_add(s0, s1, s2, t0, t1, t2)
    return s0, s1, s2


@njit(cache=True)
def axpy_tw(a0, a1, a2, x0, x1, x2, y0, y1, y2):
    for i in range(x0.size):
        m0, m1, m2 = _tw_mul(a0, a1, a2, x0[i], x1[i], x2[i])
        y0[i], y1[i], y2[i] = _tw_add(y0[i], y1[i], y2[i], m0, m1, m2)


@njit(cache=True)
def scal_add_tw(b0, b1, b2, p0, p1, p2, r0, r1, r2):
    for i in range(p0.size):
        m0, m1, m2 = _tw_mul(b0, b1, b2, p0[i], p1[i], p2[i])
        p0[i], p1[i], p2[i] = _tw_add(r0[i], r1[i], r2[i], m0, m1, m2)


@njit(cache=True)
def residual_tw(b, q0, q1, q2, r0, r1, r2):
    for i in range(b.size):
        r0[i], r1[i], r2[i] = _dxtw_add(b[i], -q0[i], -q1[i], -q2[i])


# ---------------------------------------------------------------------------
# Quasi triple-word kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def spmv_qtw(row_ptr, col_idx, vals, x0, x1, x2, y0, y1, y2):
    for i in range(row_ptr.size - 1):
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        for k in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[k]
            p0, p1, p2 = _dxqtw_mul(vals[k], x0[j], x1[j], x2[j])
            s0, s1, s2 = _qtw_add(s0, s1, s2, p0, p1, p2)
        y0[i] = s0
        y1[i] = s1
        y2[i] = s2


@njit(cache=True)
def dot_qtw(x0, x1, x2, y0, y1, y2, bounds):
    s0 = 0.0
    s1 = 0.0
    s2 = 0.0
    for p in range(bounds.size - 1):
        t0 = 0.0
        t1 = 0.0
        t2 = 0.0
        for i in range(bounds[p], bounds[p + 1]):
            m0, m1, m2 = _qtw_mul(x0[i], x1[i], x2[i], y0[i], y1[i], y2[i])
            t0, t1, t2 = _qtw_add(t0, t1, t2, m0, m1, m2)
        if p == 0:
            s0, s1, s2 = t0, t1, t2
        else:
            s0, s1, s2 = _qtw_add(s0, s1, s2, t0, t1, t2)
    return s0, s1, s2


@njit(cache=True)
def axpy_qtw(a0, a1, a2, x0, x1, x2, y0, y1, y2):
    for i in range(x0.size):
        m0, m1, m2 = _qtw_mul(a0, a1, a2, x0[i], x1[i], x2[i])
        y0[i], y1[i], y2[i] = _qtw_add(y0[i], y1[i], y2[i], m0, m1, m2)


@njit(cache=True)
def scal_add_qtw(b0, b1, b2, p0, p1, p2, r0, r1, r2):
    for i in range(p0.size):
        m0, m1, m2 = _qtw_mul(b0, b1, b2, p0[i], p1[i], p2[i])
        p0[i], p1[i], p2[i] = _qtw_add(r0[i], r1[i], r2[i], m0, m1, m2)


@njit(cache=True)
def residual_qtw(b, q0, q1, q2, r0, r1, r2):
    for i in range(b.size):
        r0[i], r1[i], r2[i] = _dxqtw_add(b[i], -q0[i], -q1[i], -q2[i])


@njit(cache=True)
def normalize_arr_qtw(w0, w1, w2):
    for i in range(w0.size):
        w0[i], w1[i], w2[i] = _vecsum3(w0[i], w1[i], w2[i])


# ---------------------------------------------------------------------------
# Collapsed FP64 norms (sequential accumulation, then one sqrt)
# ---------------------------------------------------------------------------

@njit(cache=True)
def sumsq_collapsed_1(w0):
    s = 0.0
    for i in range(w0.size):
        c = w0[i]
        s = s + c * c
    return s


@njit(cache=True)
def sumsq_collapsed_2(w0, w1):
    s = 0.0
    for i in range(w0.size):
        c = w0[i] + w1[i]
        s = s + c * c
    return s


@njit(cache=True)
def sumsq_collapsed_3(w0, w1, w2):
    s = 0.0
    for i in range(w0.size):
        c = (w0[i] + w1[i]) + w2[i]
        s = s + c * c
    return s


KERNELS = {
    "fp64": {
        "spmv": spmv_fp64,
        "dot": dot_fp64,
        "axpy": axpy_fp64,
        "scal_add": scal_add_fp64,
        "residual": residual_fp64,
        "normalize": None,
    },
    "dw": {
        "spmv": spmv_dw,
        "dot": dot_dw,
        "axpy": axpy_dw,
        "scal_add": scal_add_dw,
        "residual": residual_dw,
        "normalize": None,
    },
    "qdw": {
        "spmv": spmv_qdw,
        "dot": dot_qdw,
        "axpy": axpy_qdw,
        "scal_add": scal_add_qdw,
        "residual": residual_qdw,
        "normalize": normalize_arr_qdw,
    },
    "tw": {
        "spmv": spmv_tw,
        "dot": dot_tw,
        "axpy": axpy_tw,
        "scal_add": scal_add_tw,
        "residual": residual_tw,
        "normalize": None,
    },
    "qtw": {
        "spmv": spmv_qtw,
        "dot": dot_qtw,
        "axpy": axpy_qtw,
        "scal_add": scal_add_qtw,
        "residual": residual_qtw,
        "normalize": normalize_arr_qtw,
    },
}
