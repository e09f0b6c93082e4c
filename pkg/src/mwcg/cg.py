"""Conjugate Gradient in a selectable multi-word arithmetic.

The matrix stays FP64; the vectors, the dot products and the scalar
coefficients alpha/beta/rho live in the selected arithmetic.  The stopping
test compares the FP64 collapse of the recurrence residual norm against
epsilon times the right-hand-side norm; reported error/true-residual metrics
are accumulated in triple-word arithmetic and never feed the stopping test.

In the quasi modes the residual vector is renormalized once per iteration by
default (after its AXPY update); this can be disabled to observe the
accumulation-driven stagnation, or extended to every vector update.
"""

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import kernels as kn

__all__ = ["Normalization", "SolverConfig", "ConvergenceRecord",
           "SolverResult", "cg_solve"]


class Normalization(Enum):
    """Where quasi vectors are renormalized inside the iteration."""

    NONE = "none"
    AFTER_RESIDUAL_AXPY = "after-axpy"
    EVERY_VECTOR_OP = "every-op"


@dataclass(frozen=True)
class SolverConfig:
    mode: str = "fp64"
    epsilon: float = 1e-12
    max_iterations: Optional[int] = None  # defaults to 10 n
    normalization: Normalization = Normalization.AFTER_RESIDUAL_AXPY
    history_stride: int = 100
    partitions: int = 1

    def __post_init__(self):
        if self.mode not in kn.MODES:
            raise ValueError(f"unknown arithmetic mode {self.mode!r}")
        if not (self.epsilon > 0.0):
            raise ValueError("epsilon must be positive")
        if self.history_stride < 1:
            raise ValueError("history_stride must be >= 1")
        if self.partitions < 1:
            raise ValueError("partitions must be >= 1")
        if isinstance(self.normalization, str):
            object.__setattr__(self, "normalization",
                               Normalization(self.normalization))


@dataclass(frozen=True)
class ConvergenceRecord:
    iteration: int
    recurrence_residual: float       # ||r_k|| / ||b||, FP64 collapse
    true_residual: float             # ||b - A x_k|| / ||b||, TW accumulation
    error_norm: Optional[float]      # ||x_k - x*|| / ||x*||, TW accumulation


@dataclass
class SolverResult:
    converged: bool
    reason: str                      # 'converged' | 'max_iterations' | 'breakdown'
    iterations: int
    final_recurrence_residual: float
    x: kn.MultiwordVector
    history: list = field(default_factory=list)
    elapsed_seconds: float = 0.0
    kernel_seconds: dict = field(default_factory=dict)


def cg_solve(A, b, config=SolverConfig(), x0=None, x_star=None,
             reference=False):
    """Solve A x = b for symmetric positive definite A.

    ``x_star`` is the known solution used only for the reported error norm;
    ``reference=True`` routes every kernel through the pure-Python path.
    """
    if A.n_rows != A.n_cols:
        raise ValueError("matrix must be square")
    b = np.asarray(b, dtype=np.float64)
    if b.size != A.n_rows:
        raise ValueError("right-hand side length does not match the matrix")
    mode = config.mode
    n = A.n_rows
    max_iters = config.max_iterations if config.max_iterations is not None \
        else 10 * n
    quasi = mode in ("qdw", "qtw")
    norm_r = quasi and config.normalization is not Normalization.NONE
    norm_all = quasi and config.normalization is Normalization.EVERY_VECTOR_OP

    timers = {"spmv": 0.0, "dot": 0.0, "axpy": 0.0, "scal_add": 0.0,
              "residual": 0.0, "normalize": 0.0}

    def timed(name, fn, *args, **kw):
        t = time.perf_counter()
        out = fn(*args, **kw)
        timers[name] += time.perf_counter() - t
        return out

    t_start = time.perf_counter()
    if x0 is None:
        x = kn.MultiwordVector(mode, n)
    else:
        x = kn.MultiwordVector.from_fp64(x0, mode)

    q = timed("spmv", kn.spmv, A, x, reference=reference)
    r = timed("residual", kn.residual, b, q, reference=reference)
    if norm_r:
        timed("normalize", kn.normalize_vector, r, reference=reference)
    p = r.copy()
    rho = timed("dot", kn.dot, r, r, partitions=config.partitions,
                reference=reference)

    b_norm = kn.norm2_fp64(b)
    if b_norm == 0.0:
        b_norm = 1.0

    def rel_residual(rho_scalar):
        v = kn.scalar_to_fp64(mode, rho_scalar)
        return float(np.sqrt(abs(v))) / b_norm

    history = []

    def record(k, rel):
        err, true_res = kn.norm_metrics_tw(x, x_star, A, b)
        history.append(ConvergenceRecord(k, rel, true_res, err))

    rel = rel_residual(rho)
    record(0, rel)

    def finish(converged, reason, k, rel):
        if history[-1].iteration != k:
            record(k, rel)
        return SolverResult(
            converged=converged, reason=reason, iterations=k,
            final_recurrence_residual=rel, x=x, history=history,
            elapsed_seconds=time.perf_counter() - t_start,
            kernel_seconds=timers)

    if rel < config.epsilon:
        return finish(True, "converged", 0, rel)

    for k in range(1, max_iters + 1):
        q = timed("spmv", kn.spmv, A, p, out=q, reference=reference)
        if norm_all:
            timed("normalize", kn.normalize_vector, q, reference=reference)
        pq = timed("dot", kn.dot, p, q, partitions=config.partitions,
                   reference=reference)
        pq_f = kn.scalar_to_fp64(mode, pq)
        if pq_f == 0.0 or not np.isfinite(pq_f):
            return finish(False, "breakdown", k - 1, rel)
        alpha = kn.scalar_div(mode, rho, pq)
        timed("axpy", kn.axpy, alpha, p, x, reference=reference)
        if norm_all:
            timed("normalize", kn.normalize_vector, x, reference=reference)
        timed("axpy", kn.axpy, kn.scalar_neg(mode, alpha), q, r,
              reference=reference)
        if norm_r:
            timed("normalize", kn.normalize_vector, r, reference=reference)
        rho_new = timed("dot", kn.dot, r, r, partitions=config.partitions,
                        reference=reference)
        rel = rel_residual(rho_new)
        if k % config.history_stride == 0:
            record(k, rel)
        if rel < config.epsilon:
            return finish(True, "converged", k, rel)
        rho_f = kn.scalar_to_fp64(mode, rho_new)
        if rho_f == 0.0 or not np.isfinite(rho_f):
            return finish(False, "breakdown", k, rel)
        beta = kn.scalar_div(mode, rho_new, rho)
        timed("scal_add", kn.scal_then_add, beta, p, r, reference=reference)
        if norm_all:
            timed("normalize", kn.normalize_vector, p, reference=reference)
        rho = rho_new

    return finish(False, "max_iterations", max_iters, rel)
