"""End-to-end acceptance checks.

Each test prints exactly one PASS/FAIL line naming the guarantee it covers.
The long-running solver criteria share one cached set of solver runs.
"""

import functools

import numpy as np
import pytest

from mwcg import cli, eft, multiword as mw
from mwcg.cg import Normalization, SolverConfig, cg_solve
from mwcg.oracle import CountingScalar, ExactValue, op_count, reset_op_count
from mwcg.problemgen import generate
from mwcg.sparse import laplacian_2d, random_symmetric, scaled_laplacian_2d


def report(ok, label, detail=""):
    tail = f" ({detail})" if detail else ""
    print(f"{'PASS' if ok else 'FAIL'}: {label}{tail}")
    assert ok, f"{label}{tail}"


def _exact(*words):
    v = ExactValue.zero()
    for w in words:
        v = v.add(ExactValue.from_fp64(float(w)))
    return v


def _within(words, target, log2_bound):
    """|value(words) - target| <= 2**log2_bound * |target|, exactly."""
    diff = _exact(*words).sub(target)
    if diff == ExactValue.zero():
        return True
    if target == ExactValue.zero():
        return False
    bound = ExactValue(1, abs(target.mantissa), target.exponent + log2_bound)
    return ExactValue(1, abs(diff.mantissa), diff.exponent).compare(bound) <= 0


def _rand_parts(rng, n, lo=-40, hi=40):
    m = rng.uniform(1.0, 2.0, n) * rng.choice((-1.0, 1.0), n)
    return np.ldexp(m, rng.integers(lo, hi, n))


def _rand_dw(rng, n):
    hi = _rand_parts(rng, n)
    lo = _rand_parts(rng, n) * np.spacing(np.abs(hi)) * 0.25
    return [mw.DoubleWord(*eft.two_sum(float(h), float(l)))
            for h, l in zip(hi, lo)]


def _rand_tw(rng, n):
    out = []
    for d in _rand_dw(rng, n):
        t = float(_rand_parts(rng, 1)[0]) * np.spacing(abs(d.w1)) * 0.25
        c = mw._vec_sum_err_branch(mw._vec_sum([d.w0, d.w1, t]), 3)
        out.append(mw.TripleWord(*c))
    return out


# ---------------------------------------------------------------------------
# shared solver runs for the convergence criteria
# ---------------------------------------------------------------------------

EASY_EPS = 1e-32
HARD_EPS = 1e-24
HARD_MAX_ITERS = 20000


@functools.lru_cache(maxsize=None)
def _easy_problem():
    return generate(laplacian_2d(64))


@functools.lru_cache(maxsize=None)
def _hard_problem():
    return generate(scaled_laplacian_2d(16, decades=4.0, seed=1))


@functools.lru_cache(maxsize=None)
def _easy_run(mode):
    p = _easy_problem()
    return cg_solve(p.matrix, p.b, SolverConfig(mode=mode, epsilon=EASY_EPS),
                    x_star=p.x_star)


@functools.lru_cache(maxsize=None)
def _hard_run(mode, normalization):
    p = _hard_problem()
    cfg = SolverConfig(mode=mode, epsilon=HARD_EPS,
                       max_iterations=HARD_MAX_ITERS,
                       normalization=normalization)
    return cg_solve(p.matrix, p.b, cfg, x_star=p.x_star)


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_criterion_01_error_free_transformations():
    rng = np.random.default_rng(20240901)
    n = 1_000_000
    a = _rand_parts(rng, n)
    b = _rand_parts(rng, n)
    failures = 0
    for x, y in zip(a, b):
        x, y = float(x), float(y)
        hi, lo = eft.two_sum(x, y)
        if _exact(hi, lo) != _exact(x).add(_exact(y)):
            failures += 1
        hi, lo = eft.two_prod_fma(x, y)
        if _exact(hi, lo) != _exact(x).mul(_exact(y)):
            failures += 1
    report(failures == 0,
           "two_sum and two_prod_fma are error-free on 10^6 random pairs",
           f"{failures} failures")


def test_criterion_02_operation_counts():
    expected = {
        "dw_add": (mw.dw_add, 2, 11), "dw_mul": (mw.dw_mul, 2, 7),
        "qdw_add": (mw.qdw_add, 2, 8), "qdw_mul": (mw.qdw_mul, 2, 4),
        "qtw_add": (mw.qtw_add, 3, 21), "qtw_mul": (mw.qtw_mul, 3, 24),
    }
    got = {}
    for name, (fn, words, _) in expected.items():
        if words == 2:
            x = mw.DoubleWord(CountingScalar(1.5), CountingScalar(2.0 ** -55))
            y = mw.DoubleWord(CountingScalar(0.75), CountingScalar(-2.0 ** -56))
        else:
            x = mw.TripleWord(CountingScalar(1.5), CountingScalar(2.0 ** -55),
                              CountingScalar(2.0 ** -110))
            y = mw.TripleWord(CountingScalar(0.75), CountingScalar(-2.0 ** -56),
                              CountingScalar(2.0 ** -112))
        reset_op_count()
        fn(x, y)
        got[name] = op_count()
    ok = all(got[k] == v for k, (_, _, v) in expected.items())
    report(ok, "FP64 operation counts are 11/7/8/4/21/24 for "
           "dw_add/dw_mul/qdw_add/qdw_mul/qtw_add/qtw_mul", f"got {got}")


def test_criterion_03_precision_floors():
    rng = np.random.default_rng(7)
    n = 100_000
    worst = {"dw_add": True, "dw_mul": True, "qdw_add": True, "qdw_mul": True,
             "tw_add": True, "tw_mul": True, "qtw_add": True, "qtw_mul": True}
    for a, b in zip(_rand_dw(rng, n), _rand_dw(rng, n)):
        s = _exact(*a).add(_exact(*b))
        p = _exact(*a).mul(_exact(*b))
        worst["dw_add"] &= _within(mw.dw_add(a, b), s, -100)
        worst["dw_mul"] &= _within(mw.dw_mul(a, b), p, -100)
        worst["qdw_add"] &= _within(mw.qdw_add(a, b), s, -97)
        worst["qdw_mul"] &= _within(mw.qdw_mul(a, b), p, -97)
    for a, b in zip(_rand_tw(rng, n), _rand_tw(rng, n)):
        s = _exact(*a).add(_exact(*b))
        p = _exact(*a).mul(_exact(*b))
        worst["tw_add"] &= _within(mw.tw_add(a, b), s, -150)
        worst["tw_mul"] &= _within(mw.tw_mul(a, b), p, -150)
        worst["qtw_add"] &= _within(mw.qtw_add(a, b), s, -147)
        worst["qtw_mul"] &= _within(mw.qtw_mul(a, b), p, -147)
    bad = sorted(k for k, v in worst.items() if not v)
    report(not bad, "relative error <= 2^-100 (DW), 2^-150 (TW), "
           "x8 for quasi variants, over 10^5 random inputs",
           f"violations in {bad}" if bad else "none exceeded")


def test_criterion_04_normalization_preserves_values():
    rng = np.random.default_rng(11)
    n = 100_000
    bad = 0
    hi = _rand_parts(rng, n)
    mid = hi * _rand_parts(rng, n, -30, -5)
    low = mid * _rand_parts(rng, n, -30, -5)
    for h, m, l in zip(hi, mid, low):
        d = mw.DoubleWord(float(h), float(m))
        if _exact(*mw.normalize_dw(d)) != _exact(*d):
            bad += 1
        t = mw.TripleWord(float(h), float(m), float(l))
        if _exact(*mw.normalize_tw(t)) != _exact(*t):
            bad += 1
    report(bad == 0, "normalize_dw / normalize_tw preserve the represented "
           "value bit-exactly over 10^5 random quasi inputs",
           f"{bad} mismatches")


def test_criterion_05_problem_generation_exact():
    bad_rows = 0
    for A in (laplacian_2d(32), random_symmetric(200, seed=5)):
        p = generate(A)
        m = p.matrix
        for i in range(m.n_rows):
            s = ExactValue.zero()
            for k in range(m.row_ptr[i], m.row_ptr[i + 1]):
                s = s.add(ExactValue.from_fp64(float(m.values[k])))
            if ExactValue.from_fp64(float(p.b[i])).sub(s) != ExactValue.zero():
                bad_rows += 1
    report(bad_rows == 0, "generated problems satisfy b - A*ones = 0 exactly "
           "(oracle) for laplacian_2d(32) and random symmetric 200x200",
           f"{bad_rows} inexact rows")


def test_criterion_06_accuracy_ordering():
    errs = {}
    ok = True
    details = []
    for mode in ("fp64", "dw", "qdw", "tw", "qtw"):
        res = _easy_run(mode)
        err = res.history[-1].error_norm
        errs[mode] = err
        details.append(f"{mode}: it={res.iterations} err={err:.2e}")
    ok &= 1e-17 <= errs["fp64"] <= 1e-12          # FP64 stagnates
    ok &= errs["dw"] <= 1e-22 and errs["qdw"] <= 1e-22
    ok &= errs["tw"] <= 1e-28 and errs["qtw"] <= 1e-28
    report(ok, "final error norms on laplacian_2d(64) at eps=1e-32: FP64 in "
           "[1e-17, 1e-12], DW/QDW <= 1e-22, TW/QTW <= 1e-28",
           "; ".join(details))


def test_criterion_07_quasi_nonconvergence_without_normalization():
    cond = np.linalg.cond(_hard_problem().matrix.to_dense())
    details = [f"cond={cond:.1e}"]
    ok = cond >= 1e8
    for mode in ("qdw", "qtw"):
        bare = _hard_run(mode, Normalization.NONE)
        norm = _hard_run(mode, Normalization.AFTER_RESIDUAL_AXPY)
        # judged on the triple-word-accurate true residual: the recurrence
        # can drift or collapse while the computed iterate stays far away
        true_min = min(h.true_residual for h in bare.history)
        ok &= not bare.converged
        ok &= true_min > HARD_EPS
        ok &= norm.converged
        details.append(f"{mode}: bare reason={bare.reason} "
                       f"truemin={true_min:.1e}, "
                       f"normalized it={norm.iterations}")
    report(ok, "on a condition >= 1e8 matrix, quasi modes without "
           "normalization never reach eps=1e-24 while after-axpy "
           "normalization converges", "; ".join(details))


def test_criterion_08_quasi_iteration_parity():
    details = []
    ok = True
    for label, runs in (
            ("laplacian_2d(64)",
             {m: _easy_run(m) for m in ("dw", "qdw", "tw", "qtw")}),
            ("scaled_laplacian_2d(16)",
             {m: _hard_run(m, Normalization.AFTER_RESIDUAL_AXPY)
              for m in ("dw", "qdw", "tw", "qtw")})):
        for base, quasi in (("dw", "qdw"), ("tw", "qtw")):
            rb, rq = runs[base], runs[quasi]
            if not (rb.converged and rq.converged):
                ok = False
                details.append(f"{label} {base}/{quasi}: did not converge")
                continue
            ratio = rq.iterations / rb.iterations
            ok &= ratio <= 1.5
            details.append(f"{label} {quasi}/{base}={rq.iterations}/"
                           f"{rb.iterations}={ratio:.2f}")
    report(ok, "quasi modes need at most 1.5x the iterations of their "
           "normalized counterparts on both acceptance matrices",
           "; ".join(details))


def test_criterion_09_bitwise_reproducible_output(tmp_path):
    outputs = []
    for tag in ("one", "two"):
        summary = tmp_path / f"summary-{tag}.csv"
        history = tmp_path / f"history-{tag}.csv"
        code = cli.main([
            "solve", "--synthetic", "laplacian2d:8",
            "--mode", "dw", "--mode", "qtw", "--eps", "1e-24",
            "--threads", "2", "--stride", "10", "--no-timing",
            "--out-summary", str(summary), "--out-history", str(history)])
        assert code == cli.EXIT_OK
        outputs.append(summary.read_bytes() + history.read_bytes())
    report(outputs[0] == outputs[1],
           "two solver runs with the same spec and thread count produce "
           "bitwise-identical summary and history files",
           f"{len(outputs[0])} bytes compared")


def test_criterion_10_cli_contract(tmp_path, capsys):
    ok = True
    details = []

    verify_code = cli.main(["verify"])
    capsys.readouterr()
    ok &= verify_code == cli.EXIT_OK
    details.append(f"verify exit={verify_code}")

    summary = tmp_path / "identity.csv"
    solve_code = cli.main(["solve", "--synthetic", "identity:8",
                           "--no-timing", "--out-summary", str(summary)])
    row = summary.read_text().splitlines()[1].split(",")
    header = summary.read_text().splitlines()[0].split(",")
    iters = int(row[header.index("iterations")])
    converged = row[header.index("converged")] == "1"
    ok &= solve_code == cli.EXIT_OK and converged and iters <= 1
    details.append(f"identity solve exit={solve_code} iterations={iters}")

    bad = tmp_path / "broken.mtx"
    bad.write_text("%%MatrixMarket matrix coordinate real general\n"
                   "2 2 1\n"
                   "3 1 1.0\n")
    bad_code = cli.main(["solve", "--matrix", str(bad)])
    err = capsys.readouterr().err
    ok &= bad_code == cli.EXIT_INPUT and "line 3" in err
    details.append(f"malformed mtx exit={bad_code}, line-numbered={'line 3' in err}")

    report(ok, "CLI contract: verify exits 0, identity solve converges in "
           "one iteration, malformed input exits 2 with a line-numbered "
           "message", "; ".join(details))
