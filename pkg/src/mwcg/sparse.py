"""CSR sparse matrices, Matrix Market ingestion, and synthetic generators.

Matrix values are always FP64; only vectors carry multi-word elements.  The
parser is hand-rolled rather than delegated so that malformed input can be
reported with exact line numbers.
"""

import io
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CsrMatrix",
    "MatrixMarketError",
    "read_matrix_market",
    "write_matrix_market",
    "expand_symmetric",
    "laplacian_2d",
    "identity",
    "random_symmetric",
    "scaled_laplacian_2d",
]


class MatrixMarketError(ValueError):
    """Malformed Matrix Market input; carries the offending line number."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


@dataclass(frozen=True)
class CsrMatrix:
    """Compressed-sparse-row matrix with eagerly validated structure."""

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "row_ptr", row_ptr)
        object.__setattr__(self, "col_idx", col_idx)
        object.__setattr__(self, "values", values)
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("negative dimensions")
        if row_ptr.shape != (self.n_rows + 1,):
            raise ValueError("row_ptr must have length n_rows + 1")
        if row_ptr[0] != 0 or row_ptr[-1] != col_idx.size:
            raise ValueError("row_ptr must start at 0 and end at nnz")
        if np.any(np.diff(row_ptr) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if col_idx.size != values.size:
            raise ValueError("col_idx and values must have equal length")
        if col_idx.size and (col_idx.min() < 0 or col_idx.max() >= self.n_cols):
            raise ValueError("column index out of range")
        for i in range(self.n_rows):
            cols = col_idx[row_ptr[i]:row_ptr[i + 1]]
            if cols.size > 1 and np.any(np.diff(cols) <= 0):
                raise ValueError(f"row {i}: column indices not strictly increasing")

    @property
    def nnz(self):
        return int(self.col_idx.size)

    def to_dense(self):
        dense = np.zeros((self.n_rows, self.n_cols))
        for i in range(self.n_rows):
            sl = slice(self.row_ptr[i], self.row_ptr[i + 1])
            dense[i, self.col_idx[sl]] = self.values[sl]
        return dense

    def diagonal_index(self, i):
        """Index into values of entry (i, i), or None if structurally absent."""
        sl = self.col_idx[self.row_ptr[i]:self.row_ptr[i + 1]]
        pos = np.searchsorted(sl, i)
        if pos < sl.size and sl[pos] == i:
            return int(self.row_ptr[i] + pos)
        return None


def _csr_from_coo(n_rows, n_cols, rows, cols, vals):
    """Build CSR with rows sorted and duplicate entries summed in FP64."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        keep = np.empty(rows.size, dtype=bool)
        keep[0] = True
        np.logical_or(rows[1:] != rows[:-1], cols[1:] != cols[:-1], out=keep[1:])
        group = np.cumsum(keep) - 1
        summed = np.zeros(int(group[-1]) + 1)
        np.add.at(summed, group, vals)
        rows, cols, vals = rows[keep], cols[keep], summed
    row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.add.at(row_ptr, rows + 1, 1)
    np.cumsum(row_ptr, out=row_ptr)
    return CsrMatrix(n_rows, n_cols, row_ptr, cols, vals)


# ---------------------------------------------------------------------------
# Matrix Market
# ---------------------------------------------------------------------------

def read_matrix_market(source):
    """Parse coordinate Matrix Market input.

    ``source`` may be a path, a text/byte stream, or bytes.  Returns
    ``(CsrMatrix, symmetric)``; symmetric files keep only the stored lower
    triangle, flagged for later expansion.  Duplicate entries are summed.
    """
    if isinstance(source, str):
        with open(source, "r", encoding="ascii") as f:
            return _parse_mm(f)
    if isinstance(source, bytes):
        return _parse_mm(io.StringIO(source.decode("ascii")))
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("ascii")
    return _parse_mm(io.StringIO(data))


def _parse_mm(stream):
    banner = stream.readline()
    if not banner:
        raise MatrixMarketError("empty input, missing banner", 1)
    parts = banner.strip().split()
    if len(parts) != 5 or parts[0] != "%%MatrixMarket":
        raise MatrixMarketError("expected '%%MatrixMarket matrix coordinate "
                                "real|integer general|symmetric' banner", 1)
    _, obj, fmt, fld, sym = (p.lower() for p in parts)
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"unsupported object/format '{obj} {fmt}'", 1)
    if fld not in ("real", "integer"):
        raise MatrixMarketError(f"unsupported field '{fld}' (pattern/complex "
                                "matrices are not accepted)", 1)
    if sym not in ("general", "symmetric"):
        raise MatrixMarketError(f"unsupported symmetry '{sym}'", 1)
    symmetric = sym == "symmetric"

    lineno = 1
    size = None
    for line in stream:
        lineno += 1
        text = line.strip()
        if not text or text.startswith("%"):
            continue
        fields = text.split()
        if len(fields) != 3:
            raise MatrixMarketError("size line must be 'rows cols nnz'", lineno)
        try:
            n_rows, n_cols, nnz = (int(f) for f in fields)
        except ValueError:
            raise MatrixMarketError("size line must be 'rows cols nnz'", lineno)
        if n_rows < 0 or n_cols < 0 or nnz < 0:
            raise MatrixMarketError("negative size", lineno)
        size = (n_rows, n_cols, nnz)
        break
    if size is None:
        raise MatrixMarketError("missing size line", lineno)
    n_rows, n_cols, nnz = size
    if symmetric and n_rows != n_cols:
        raise MatrixMarketError("symmetric matrix must be square", lineno)

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    k = 0
    for line in stream:
        lineno += 1
        text = line.strip()
        if not text or text.startswith("%"):
            continue
        fields = text.split()
        if len(fields) != 3:
            raise MatrixMarketError("entry must be 'row col value'", lineno)
        try:
            i = int(fields[0])
            j = int(fields[1])
            v = float(fields[2])
        except ValueError:
            raise MatrixMarketError("entry must be 'row col value'", lineno)
        if k >= nnz:
            raise MatrixMarketError(f"more than the declared {nnz} entries", lineno)
        if not (1 <= i <= n_rows) or not (1 <= j <= n_cols):
            raise MatrixMarketError(f"index ({i}, {j}) out of range "
                                    f"for {n_rows}x{n_cols}", lineno)
        if symmetric and j > i:
            raise MatrixMarketError("symmetric file must store the lower "
                                    f"triangle only, got ({i}, {j})", lineno)
        rows[k] = i - 1
        cols[k] = j - 1
        vals[k] = v
        k += 1
    if k != nnz:
        raise MatrixMarketError(f"declared {nnz} entries but found {k}", lineno)
    return _csr_from_coo(n_rows, n_cols, rows, cols, vals), symmetric


def write_matrix_market(m, target, symmetric=False):
    """Write coordinate Matrix Market text (values in exact hex-free repr)."""
    close = False
    if isinstance(target, str):
        stream = open(target, "w", encoding="ascii")
        close = True
    else:
        stream = target
    try:
        kind = "symmetric" if symmetric else "general"
        stream.write(f"%%MatrixMarket matrix coordinate real {kind}\n")
        stream.write(f"{m.n_rows} {m.n_cols} {m.nnz}\n")
        for i in range(m.n_rows):
            for k in range(m.row_ptr[i], m.row_ptr[i + 1]):
                j = int(m.col_idx[k])
                if symmetric and j > i:
                    raise ValueError("symmetric output requires lower-triangle CSR")
                stream.write(f"{i + 1} {j + 1} {float(m.values[k])!r}\n")
    finally:
        if close:
            stream.close()


def expand_symmetric(m):
    """Mirror a one-triangle CSR into general form.

    The diagonal is not duplicated: nnz_out = 2*nnz_in - nnz_diagonal.
    Input holding entries in both triangles is rejected.
    """
    if m.n_rows != m.n_cols:
        raise ValueError("symmetric expansion needs a square matrix")
    rows = np.repeat(np.arange(m.n_rows, dtype=np.int64), np.diff(m.row_ptr))
    cols = m.col_idx
    lower = cols < rows
    upper = cols > rows
    if lower.any() and upper.any():
        raise ValueError("input holds entries in both triangles; "
                         "expected a single stored triangle")
    off = lower | upper
    all_rows = np.concatenate([rows, cols[off]])
    all_cols = np.concatenate([cols, rows[off]])
    all_vals = np.concatenate([m.values, m.values[off]])
    return _csr_from_coo(m.n_rows, m.n_cols, all_rows, all_cols, all_vals)


# ---------------------------------------------------------------------------
# Synthetic matrices
# ---------------------------------------------------------------------------

def laplacian_2d(k):
    """Standard 5-point Poisson stencil on a k x k grid: k^2 x k^2, SPD."""
    if k < 2:
        raise ValueError("grid size must be at least 2")
    n = k * k
    rows, cols, vals = [], [], []
    for y in range(k):
        for x in range(k):
            i = y * k + x
            rows.append(i)
            cols.append(i)
            vals.append(4.0)
            for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                yy, xx = y + dy, x + dx
                if 0 <= yy < k and 0 <= xx < k:
                    rows.append(i)
                    cols.append(yy * k + xx)
                    vals.append(-1.0)
    return _csr_from_coo(n, n, rows, cols, vals)


def identity(n):
    """The n x n identity in CSR form."""
    idx = np.arange(n, dtype=np.int64)
    return CsrMatrix(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))


def _quantize(values, bits):
    """Round each value to ``bits`` significant bits.

    The generators below snap their random values to a limited mantissa width
    so that exact row sums stay representable in FP64, which the
    exact-solution problem construction depends on.  The values still look
    like arbitrary decimals.
    """
    m, e = np.frexp(values)
    return np.ldexp(np.round(np.ldexp(m, bits)), e - bits)


def random_symmetric(n, extra_per_row=4, seed=0, dominance=2.0):
    """Random symmetric, diagonally dominant (hence SPD) test matrix.

    Off-diagonal magnitudes are bounded away from zero and all values are
    quantized to 26 significant bits (see :func:`_quantize`).
    """
    rng = np.random.default_rng(seed)
    rows, cols, vals = [], [], []
    for i in range(n):
        js = rng.integers(0, n, size=extra_per_row)
        for j in js:
            if j == i:
                continue
            v = rng.uniform(0.25, 1.0) * rng.choice((-1.0, 1.0))
            v = float(_quantize(np.float64(v), 26))
            rows.extend((i, int(j)))
            cols.extend((int(j), i))
            vals.extend((v, v))
    m = _csr_from_coo(n, n, rows, cols, vals)
    # add a dominant diagonal on top of whatever landed off-diagonal
    absrow = np.zeros(n)
    r = np.repeat(np.arange(n), np.diff(m.row_ptr))
    np.add.at(absrow, r, np.abs(m.values))
    diag = _quantize(absrow * dominance + rng.uniform(1.0, 2.0, size=n), 26)
    rows = np.concatenate([r, np.arange(n, dtype=np.int64)])
    cols = np.concatenate([m.col_idx, np.arange(n, dtype=np.int64)])
    vals = np.concatenate([m.values, diag])
    return _csr_from_coo(n, n, rows, cols, vals)


def scaled_laplacian_2d(k, decades=3.0, seed=1234):
    """Diagonally scaled Poisson matrix D*A*D with log-uniform scaling.

    Spreading the scale over ``decades`` orders of magnitude in D squares in
    the condition number, giving an ill-conditioned but still symmetric
    positive definite test problem.  The scale factors are quantized to 12
    significant bits so each product d_i * a_ij * d_j is an exact short
    dyadic (see :func:`_quantize`).
    """
    a = laplacian_2d(k)
    rng = np.random.default_rng(seed)
    d = _quantize(10.0 ** rng.uniform(0.0, decades, size=a.n_rows), 12)
    rows = np.repeat(np.arange(a.n_rows, dtype=np.int64), np.diff(a.row_ptr))
    vals = a.values * d[rows] * d[a.col_idx]
    return CsrMatrix(a.n_rows, a.n_cols, a.row_ptr, a.col_idx, vals)
