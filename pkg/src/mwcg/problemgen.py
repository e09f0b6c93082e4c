"""Test problems whose exact solution is known by construction.

Given a matrix, choose the solution of all ones and compute each exact row
sum with the dyadic-rational oracle.  The right-hand side entry is that sum
correctly rounded to FP64, and the rounding gap is absorbed into the diagonal
entry of the row, so that the perturbed system satisfies A' x* = b exactly in
real arithmetic.  When the perturbed diagonal is not itself representable in
FP64, the right-hand side entry is nudged by a few ulps until it is.
"""

from dataclasses import dataclass

import numpy as np

from .oracle import ExactValue
from .sparse import CsrMatrix

__all__ = ["GeneratedProblem", "generate"]

_MAX_ULP_NUDGE = 4


@dataclass(frozen=True)
class GeneratedProblem:
    matrix: CsrMatrix
    b: np.ndarray
    x_star: np.ndarray
    perturbation_norm: float     # FP64 2-norm of the diagonal perturbations
    max_ulp_adjustment: int      # largest right-hand-side nudge used


def _representable(v):
    """Whether the exact value v is an FP64 number."""
    return ExactValue.from_fp64(v.to_fp64()).compare(v) == 0


def _nudges(x):
    yield x
    up = down = x
    for _ in range(_MAX_ULP_NUDGE):
        up = np.nextafter(up, np.inf)
        down = np.nextafter(down, -np.inf)
        yield float(up)
        yield float(down)


def generate(A, x_star=None):
    """Build an exactly consistent problem from ``A`` with solution ones.

    Only the all-ones solution is supported: it keeps every product a_ij *
    x_j exact by construction, so the only rounding to manage is the row sum
    itself.
    """
    if A.n_rows != A.n_cols:
        raise ValueError("matrix must be square")
    if x_star is not None:
        xs = np.asarray(x_star, dtype=np.float64)
        if xs.shape != (A.n_cols,) or not np.all(xs == 1.0):
            raise ValueError("only the all-ones solution vector is supported")
    n = A.n_rows
    values = A.values.copy()
    b = np.empty(n)
    deltas = np.zeros(n)
    max_nudge = 0

    for i in range(n):
        lo, hi = int(A.row_ptr[i]), int(A.row_ptr[i + 1])
        s = ExactValue.zero()
        for k in range(lo, hi):
            s = s.add(ExactValue.from_fp64(float(A.values[k])))
        di = A.diagonal_index(i)
        b_rounded = s.to_fp64()
        if not np.isfinite(b_rounded):
            raise ValueError(f"row {i}: exact row sum overflows FP64")

        chosen = None  # (b_i, new diagonal value or None, nudge index)
        for nudge_count, bi in enumerate(_nudges(b_rounded)):
            delta = ExactValue.from_fp64(bi).sub(s)
            if delta.compare(ExactValue.zero()) == 0:
                chosen = (bi, None, nudge_count)
                break
            if di is None:
                continue
            new_diag = ExactValue.from_fp64(float(A.values[di])).add(delta)
            if _representable(new_diag):
                chosen = (bi, new_diag.to_fp64(), nudge_count)
                break
        if chosen is None:
            if di is None:
                raise ValueError(f"row {i}: inexact row sum but no diagonal "
                                 "entry to absorb the rounding gap")
            raise ValueError(f"row {i}: no representable diagonal within "
                             f"{_MAX_ULP_NUDGE} ulps of the rounded row sum")

        bi, new_diag, nudge_count = chosen
        b[i] = bi
        # the nudge index maps 0 -> exact, odd -> up by ulps, even -> down
        max_nudge = max(max_nudge, (nudge_count + 1) // 2)
        if new_diag is not None and new_diag != float(A.values[di]):
            deltas[i] = new_diag - float(A.values[di])
            values[di] = new_diag

    matrix = CsrMatrix(A.n_rows, A.n_cols, A.row_ptr.copy(),
                       A.col_idx.copy(), values)
    return GeneratedProblem(
        matrix=matrix, b=b, x_star=np.ones(n),
        perturbation_norm=float(np.sqrt(np.sum(deltas * deltas))),
        max_ulp_adjustment=max_nudge)
