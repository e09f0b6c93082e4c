"""Command-line harness.

Subcommands
-----------
solve
    Run the solver on a matrix file or synthetic problem, for each requested
    (mode, epsilon) pair, and emit a summary CSV, an optional convergence
    history CSV, and an optional JSON dump.
bench
    Time the SpMV or DOT kernel per mode and report a bytes-moved model and
    derived GB/s.
verify
    Run the self-verification suites; exit 3 if any check fails.
generate
    Emit the exactly consistent problem (matrix + right-hand side) as Matrix
    Market files.

Exit codes: 0 success, 1 usage error, 2 input error, 3 verification failure.

The ``--threads`` value (fallback: environment variable ``MW_THREADS``) is
the dot-product partition count; execution is sequential, so it controls the
reduction shape for reproducibility rather than actual parallelism.  Two runs
with the same spec and thread count produce bitwise-identical summary and
history files when ``--no-timing`` is given (wall-clock columns are otherwise
the only nondeterministic output).
"""

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import __version__, cg, kernels as kn, problemgen, sparse, verify

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_VERIFY = 3


class _Parser(argparse.ArgumentParser):
    # argparse uses status 2 for usage errors; this tool reserves 2 for bad
    # input files, so remap.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class InputError(Exception):
    pass


def _load_matrix(args):
    """Resolve --matrix / --synthetic into a general-form CsrMatrix."""
    if args.matrix is not None:
        try:
            m, symmetric = sparse.read_matrix_market(args.matrix)
        except OSError as exc:
            raise InputError(f"cannot read {args.matrix}: {exc.strerror}")
        except sparse.MatrixMarketError as exc:
            raise InputError(f"{args.matrix}: {exc}")
        if symmetric:
            m = sparse.expand_symmetric(m)
        return m, args.matrix
    spec = args.synthetic
    name, _, rest = spec.partition(":")
    params = rest.split(":") if rest else []
    try:
        if name == "identity":
            (n,) = params
            return sparse.identity(int(n)), spec
        if name == "laplacian2d":
            (k,) = params
            return sparse.laplacian_2d(int(k)), spec
        if name == "scaled-laplacian2d":
            k = int(params[0])
            decades = float(params[1]) if len(params) > 1 else 3.0
            seed = int(params[2]) if len(params) > 2 else 1234
            return sparse.scaled_laplacian_2d(k, decades, seed), spec
        if name == "random":
            n = int(params[0])
            seed = int(params[1]) if len(params) > 1 else 0
            return sparse.random_symmetric(n, seed=seed), spec
    except (ValueError, TypeError):
        raise InputError(f"malformed synthetic spec {spec!r}")
    raise InputError(
        f"unknown synthetic matrix {name!r}; expected identity:n, "
        "laplacian2d:k, scaled-laplacian2d:k[:decades[:seed]] "
        "or random:n[:seed]")


def _generate_problem(matrix, label):
    try:
        return problemgen.generate(matrix)
    except ValueError as exc:
        raise InputError(f"{label}: problem generation failed: {exc}")


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("MW_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"MW_THREADS={env!r} is not an integer")
    return 1


def _fmt(x):
    if x is None:
        return ""
    return repr(float(x))


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="ascii") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _cmd_solve(args):
    matrix, label = _load_matrix(args)
    if matrix.n_rows != matrix.n_cols:
        raise InputError(f"{label}: matrix is not square")
    problem = _generate_problem(matrix, label)
    partitions = _threads(args)

    runs = []
    for mode in args.mode:
        for eps in args.eps:
            config = cg.SolverConfig(
                mode=mode, epsilon=eps,
                max_iterations=args.max_iters,
                normalization=cg.Normalization(args.normalize),
                history_stride=args.stride,
                partitions=partitions)
            best = None
            for _ in range(args.reps):
                result = cg.cg_solve(problem.matrix, problem.b, config,
                                     x_star=problem.x_star)
                if best is None or result.elapsed_seconds < best.elapsed_seconds:
                    best = result
            runs.append((mode, eps, best))

    # flag the best mode per epsilon: fastest converged run, or fewest
    # iterations when timing is excluded from the output
    best_key = {}
    for mode, eps, res in runs:
        if not res.converged:
            continue
        key = res.iterations if args.no_timing else res.elapsed_seconds
        if eps not in best_key or key < best_key[eps][0]:
            best_key[eps] = (key, mode)

    header = ["matrix", "mode", "eps", "normalization", "converged",
              "iterations", "final_error_norm", "final_recurrence_residual",
              "best"]
    if not args.no_timing:
        header.insert(6, "seconds")
    rows = []
    for mode, eps, res in runs:
        err = res.history[-1].error_norm
        row = [label, mode, _fmt(eps), args.normalize,
               int(res.converged), res.iterations, _fmt(err),
               _fmt(res.final_recurrence_residual),
               int(best_key.get(eps, (None, None))[1] == mode)]
        if not args.no_timing:
            row.insert(6, f"{res.elapsed_seconds:.6f}")
        rows.append(row)

    if args.out_summary:
        _write_csv(args.out_summary, header, rows)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)

    if args.out_history:
        hheader = ["matrix", "mode", "eps", "iteration",
                   "recurrence_residual", "true_residual", "error_norm"]
        hrows = []
        for mode, eps, res in runs:
            for rec in res.history:
                hrows.append([label, mode, _fmt(eps), rec.iteration,
                              _fmt(rec.recurrence_residual),
                              _fmt(rec.true_residual),
                              _fmt(rec.error_norm)])
        _write_csv(args.out_history, hheader, hrows)

    if args.json:
        payload = {
            "version": __version__,
            "matrix": label,
            "n": matrix.n_rows,
            "nnz": matrix.nnz,
            "normalization": args.normalize,
            "threads": partitions,
            "runs": [],
        }
        for mode, eps, res in runs:
            entry = {
                "mode": mode, "eps": eps,
                "converged": res.converged, "reason": res.reason,
                "iterations": res.iterations,
                "final_recurrence_residual": res.final_recurrence_residual,
                "final_error_norm": res.history[-1].error_norm,
                "history": [[h.iteration, h.recurrence_residual,
                             h.true_residual, h.error_norm]
                            for h in res.history],
            }
            if not args.no_timing:
                entry["seconds"] = res.elapsed_seconds
                entry["kernel_seconds"] = res.kernel_seconds
            payload["runs"].append(entry)
        with open(args.json, "w", encoding="ascii") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def _bytes_model(kernel, mode, n, nnz):
    """Documented bytes-moved estimate.

    spmv: row_ptr (n+1)*8 + col_idx nnz*8 + values nnz*8 read, one x element
    read per stored entry, one y element written per row; multi-word elements
    count 8 bytes per word.  dot: both input vectors read once.
    """
    w = kn.mode_words(mode)
    if kernel == "spmv":
        return (n + 1) * 8 + nnz * 16 + nnz * w * 8 + n * w * 8
    return 2 * n * w * 8


def _cmd_bench(args):
    matrix, label = _load_matrix(args)
    n, nnz = matrix.n_rows, matrix.nnz
    partitions = _threads(args)
    rng = np.random.default_rng(0)
    rows = []
    for mode in args.mode:
        x = kn.MultiwordVector.from_fp64(rng.standard_normal(n), mode)
        y = kn.MultiwordVector.from_fp64(rng.standard_normal(n), mode)
        if args.kernel == "spmv":
            out = kn.MultiwordVector(mode, n)
            kn.spmv(matrix, x, out=out)  # warm-up / compile
            best = min(_timed(lambda: kn.spmv(matrix, x, out=out))
                       for _ in range(args.reps))
        else:
            kn.dot(x, y, partitions=partitions)
            best = min(_timed(lambda: kn.dot(x, y, partitions=partitions))
                       for _ in range(args.reps))
        model = _bytes_model(args.kernel, mode, n, nnz)
        gbps = model / best / 1e9 if best > 0 else float("inf")
        rows.append([label, args.kernel, mode, n, nnz, f"{best:.9f}",
                     model, f"{gbps:.3f}"])
    header = ["matrix", "kernel", "mode", "n", "nnz", "seconds_best",
              "bytes_model", "gbps"]
    if args.out_summary:
        _write_csv(args.out_summary, header, rows)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return EXIT_OK


def _timed(fn):
    t = time.perf_counter()
    fn()
    return time.perf_counter() - t


# ---------------------------------------------------------------------------
# verify / generate
# ---------------------------------------------------------------------------

def _cmd_verify(args):
    results = verify.run_all()
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.suite}.{r.name}: {r.detail}")
        failed += not r.passed
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def _cmd_generate(args):
    matrix, label = _load_matrix(args)
    if matrix.n_rows != matrix.n_cols:
        raise InputError(f"{label}: matrix is not square")
    problem = _generate_problem(matrix, label)
    sparse.write_matrix_market(problem.matrix, args.out_matrix)
    with open(args.out_rhs, "w", encoding="ascii") as f:
        f.write("%%MatrixMarket matrix array real general\n")
        f.write(f"{problem.b.size} 1\n")
        for v in problem.b:
            f.write(f"{float(v)!r}\n")
    print(f"wrote {args.out_matrix} and {args.out_rhs} "
          f"(perturbation norm {problem.perturbation_norm!r}, "
          f"max rhs adjustment {problem.max_ulp_adjustment} ulp)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _add_input_args(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--matrix", help="Matrix Market file (.mtx)")
    g.add_argument("--synthetic",
                   help="identity:n | laplacian2d:k | "
                        "scaled-laplacian2d:k[:decades[:seed]] | "
                        "random:n[:seed]")


def _build_parser():
    parser = _Parser(prog="mwcg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="run the solver")
    _add_input_args(ps)
    ps.add_argument("--mode", action="append", choices=kn.MODES,
                    help="arithmetic mode (repeatable; default fp64)")
    ps.add_argument("--eps", action="append", type=float,
                    help="stopping tolerance (repeatable; default 1e-12)")
    ps.add_argument("--normalize", default="after-axpy",
                    choices=[n.value for n in cg.Normalization])
    ps.add_argument("--threads", type=int)
    ps.add_argument("--reps", type=int, default=1)
    ps.add_argument("--stride", type=int, default=100)
    ps.add_argument("--max-iters", type=int)
    ps.add_argument("--out-summary")
    ps.add_argument("--out-history")
    ps.add_argument("--json")
    ps.add_argument("--no-timing", action="store_true",
                    help="omit wall-clock columns (bitwise-reproducible output)")
    ps.set_defaults(fn=_cmd_solve)

    pb = sub.add_parser("bench", help="time a kernel")
    _add_input_args(pb)
    pb.add_argument("--kernel", choices=("spmv", "dot"), default="spmv")
    pb.add_argument("--mode", action="append", choices=kn.MODES)
    pb.add_argument("--threads", type=int)
    pb.add_argument("--reps", type=int, default=10)
    pb.add_argument("--out-summary")
    pb.set_defaults(fn=_cmd_bench)

    pv = sub.add_parser("verify", help="run self-verification suites")
    pv.set_defaults(fn=_cmd_verify)

    pg = sub.add_parser("generate", help="emit an exactly consistent problem")
    _add_input_args(pg)
    pg.add_argument("--out-matrix", required=True)
    pg.add_argument("--out-rhs", required=True)
    pg.set_defaults(fn=_cmd_generate)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "mode") and args.mode is None:
        args.mode = ["fp64"]
    if hasattr(args, "eps") and args.eps is None:
        args.eps = [1e-12]
    for attr, least in (("reps", 1), ("stride", 1), ("threads", 1),
                        ("max_iters", 1)):
        v = getattr(args, attr, None)
        if v is not None and v < least:
            parser.error(f"--{attr.replace('_', '-')} must be >= {least}")
    for e in getattr(args, "eps", None) or []:
        if not e > 0.0:
            parser.error("--eps must be positive")
    try:
        return args.fn(args)
    except InputError as exc:
        print(f"mwcg: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
