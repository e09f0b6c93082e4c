"""Self-verification suites backing the ``verify`` CLI subcommand.

Each suite returns a list of ``CheckResult``; a clean build passes every
check.  The same routines are reused by the test suite with larger sample
counts (the module-level ``N_*`` knobs).
"""

from dataclasses import dataclass

import numpy as np

from . import kernels as kn, multiword as mw, problemgen, sparse
from .eft import two_prod_fma, two_sum
from .oracle import CountingScalar, ExactValue, op_count, reset_op_count

__all__ = ["CheckResult", "run_all", "suite_op_counts", "suite_error_free",
           "suite_precision_floors", "suite_normalization",
           "suite_problem_generation", "suite_kernel_agreement"]

N_ERROR_FREE = 2000
N_PRECISION = 2000
N_NORMALIZE = 2000
SEED = 20240901


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""


def _exact(x):
    return ExactValue.from_fp64(x)


def _rand_fp64(rng, n, exp_range=(-20, 20)):
    m = rng.uniform(1.0, 2.0, size=n) * rng.choice((-1.0, 1.0), size=n)
    e = rng.integers(exp_range[0], exp_range[1] + 1, size=n)
    return np.ldexp(m, e)


def _rand_dw(rng, n):
    hi = _rand_fp64(rng, n)
    lo = _rand_fp64(rng, n) * np.spacing(np.abs(hi)) * 0.25
    out = []
    for h, l in zip(hi, lo):
        out.append(mw.DoubleWord(*two_sum(float(h), float(l))))
    return out

def _rand_tw(rng, n):
    out = []
    for d in _rand_dw(rng, n):
        t = _rand_fp64(rng, 1)[0] * np.spacing(abs(d.w1)) * 0.25
        c = mw._vec_sum_err_branch(mw._vec_sum([d.w0, d.w1, float(t)]), 3)
        out.append(mw.TripleWord(*c))
    return out


def _rel_err_bits(value_words, exact):
    """Relative error of sum(words) vs the exact value, as a float."""
    approx = _exact(value_words[0])
    for w in value_words[1:]:
        approx = approx.add(_exact(w))
    diff = approx.sub(exact)
    if diff.compare(ExactValue.zero()) == 0:
        return 0.0
    return float(abs(diff.as_fraction() / exact.as_fraction()))


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def suite_op_counts():
    expected = {
        "two_sum": (lambda a, b: two_sum(a, b), 2, 6),
        "quick_two_sum": (lambda a, b: mw.quick_two_sum(a, b), 2, 3),
        "two_prod_fma": (lambda a, b: two_prod_fma(a, b), 2, 2),
        "dw_add": (lambda a, b: mw.dw_add(a, b), "dw", 11),
        "dw_mul": (lambda a, b: mw.dw_mul(a, b), "dw", 7),
        "qdw_add": (lambda a, b: mw.qdw_add(a, b), "dw", 8),
        "qdw_mul": (lambda a, b: mw.qdw_mul(a, b), "dw", 4),
        "qtw_add": (lambda a, b: mw.qtw_add(a, b), "tw", 21),
        "qtw_mul": (lambda a, b: mw.qtw_mul(a, b), "tw", 24),
    }
    results = []
    for name, (fn, kind, want) in expected.items():
        if kind == 2:
            a, b = CountingScalar(1.5), CountingScalar(0.25)
        elif kind == "dw":
            a = mw.DoubleWord(CountingScalar(1.5), CountingScalar(2.0 ** -55))
            b = mw.DoubleWord(CountingScalar(0.75), CountingScalar(2.0 ** -56))
        else:
            a = mw.TripleWord(CountingScalar(1.5), CountingScalar(2.0 ** -55),
                              CountingScalar(2.0 ** -110))
            b = mw.TripleWord(CountingScalar(0.75), CountingScalar(2.0 ** -56),
                              CountingScalar(2.0 ** -111))
        reset_op_count()
        fn(a, b)
        got = op_count()
        results.append(CheckResult("op_counts", name, got == want,
                                   f"expected {want}, counted {got}"))
    return results


def suite_error_free(n=None):
    n = n or N_ERROR_FREE
    rng = np.random.default_rng(SEED)
    a = _rand_fp64(rng, n, (-500, 500))
    b = _rand_fp64(rng, n, (-500, 500))
    bad_sum = bad_prod = 0
    for x, y in zip(a, b):
        x, y = float(x), float(y)
        hi, lo = two_sum(x, y)
        if _exact(hi).add(_exact(lo)).compare(_exact(x).add(_exact(y))) != 0:
            bad_sum += 1
        if abs(x * y) < 1e280 and x * y != 0.0 and abs(x * y) > 1e-280:
            hi, lo = two_prod_fma(x, y)
            if _exact(hi).add(_exact(lo)).compare(
                    _exact(x).mul(_exact(y))) != 0:
                bad_prod += 1
    return [
        CheckResult("error_free", "two_sum", bad_sum == 0,
                    f"{bad_sum}/{n} failures"),
        CheckResult("error_free", "two_prod_fma", bad_prod == 0,
                    f"{bad_prod}/{n} failures"),
    ]


def suite_precision_floors(n=None):
    n = n or N_PRECISION
    rng = np.random.default_rng(SEED + 1)
    results = []

    def exact_dw(d):
        return _exact(d.w0).add(_exact(d.w1))

    def exact_tw(t):
        return _exact(t.w0).add(_exact(t.w1)).add(_exact(t.w2))

    cases = [
        ("dw_add", mw.dw_add, _rand_dw, exact_dw, "add", 2.0 ** -100),
        ("dw_mul", mw.dw_mul, _rand_dw, exact_dw, "mul", 2.0 ** -100),
        ("qdw_add", mw.qdw_add, _rand_dw, exact_dw, "add", 8 * 2.0 ** -100),
        ("qdw_mul", mw.qdw_mul, _rand_dw, exact_dw, "mul", 8 * 2.0 ** -100),
        ("tw_add", mw.tw_add, _rand_tw, exact_tw, "add", 2.0 ** -150),
        ("tw_mul", mw.tw_mul, _rand_tw, exact_tw, "mul", 2.0 ** -150),
        ("qtw_add", mw.qtw_add, _rand_tw, exact_tw, "add", 8 * 2.0 ** -150),
        ("qtw_mul", mw.qtw_mul, _rand_tw, exact_tw, "mul", 8 * 2.0 ** -150),
    ]
    for name, fn, gen, exact_of, op, bound in cases:
        xs = gen(rng, n)
        ys = gen(rng, n)
        worst = 0.0
        for x, y in zip(xs, ys):
            z = fn(x, y)
            ex, ey = exact_of(x), exact_of(y)
            e = ex.add(ey) if op == "add" else ex.mul(ey)
            worst = max(worst, _rel_err_bits(tuple(z), e))
        results.append(CheckResult("precision_floors", name, worst <= bound,
                                   f"max rel err {worst:.3e}, bound {bound:.3e}"))
    return results


def suite_normalization(n=None):
    n = n or N_NORMALIZE
    rng = np.random.default_rng(SEED + 2)
    bad_dw = bad_tw = 0
    hi = _rand_fp64(rng, n)
    lo = _rand_fp64(rng, n) * np.abs(hi) * rng.uniform(0, 2.0 ** -40, n)
    for h, l in zip(hi, lo):
        a = mw.DoubleWord(float(h), float(l))
        z = mw.normalize_dw(a)
        if _exact(z.w0).add(_exact(z.w1)).compare(
                _exact(a.w0).add(_exact(a.w1))) != 0:
            bad_dw += 1
        t = mw.TripleWord(float(h), float(l), float(l) * 2.0 ** -30)
        zt = mw.normalize_tw(t)
        va = _exact(t.w0).add(_exact(t.w1)).add(_exact(t.w2))
        vz = _exact(zt.w0).add(_exact(zt.w1)).add(_exact(zt.w2))
        if va.compare(vz) != 0:
            bad_tw += 1
    return [
        CheckResult("normalization", "normalize_dw", bad_dw == 0,
                    f"{bad_dw}/{n} value changes"),
        CheckResult("normalization", "normalize_tw", bad_tw == 0,
                    f"{bad_tw}/{n} value changes"),
    ]


def suite_problem_generation():
    results = []
    for name, A in (("laplacian_2d(8)", sparse.laplacian_2d(8)),
                    ("random_symmetric(60)",
                     sparse.random_symmetric(60, seed=5))):
        p = problemgen.generate(A)
        ok = True
        for i in range(p.matrix.n_rows):
            s = ExactValue.zero()
            for k in range(p.matrix.row_ptr[i], p.matrix.row_ptr[i + 1]):
                s = s.add(_exact(float(p.matrix.values[k])))
            if s.compare(_exact(float(p.b[i]))) != 0:
                ok = False
                break
        results.append(CheckResult("problem_generation", name, ok,
                                   "exact residual zero" if ok
                                   else f"row {i} inexact"))
    return results


def suite_kernel_agreement():
    rng = np.random.default_rng(SEED + 3)
    A = sparse.laplacian_2d(5)
    n = A.n_rows
    results = []
    for mode in kn.MODES:
        if mode == "fp64":
            continue
        x = kn.MultiwordVector.from_fp64(rng.standard_normal(n), mode)
        x.words[1][:] = rng.standard_normal(n) * 1e-20
        y1 = kn.spmv(A, x)
        y2 = kn.spmv(A, x, reference=True)
        ok = all((a == b).all() for a, b in zip(y1.words, y2.words))
        d1 = kn.dot(x, x, partitions=3)
        d2 = kn.dot(x, x, partitions=3, reference=True)
        ok = ok and tuple(d1) == tuple(d2)
        results.append(CheckResult("kernel_agreement", mode, ok,
                                   "fast path == reference path" if ok
                                   else "bitwise mismatch"))
    return results


SUITES = (suite_op_counts, suite_error_free, suite_precision_floors,
          suite_normalization, suite_problem_generation,
          suite_kernel_agreement)


def run_all():
    out = []
    for suite in SUITES:
        out.extend(suite())
    return out
