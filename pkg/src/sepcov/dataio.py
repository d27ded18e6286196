"""Plain-text matrix-stack file format.

Layout: optional '#' comment lines, then a header line ``N d1 d2``, then N
blocks of d1 lines with d2 whitespace-separated floats each.  Floats are
written with shortest round-trip formatting, so write(parse(f)) is a fixed
point and files are diff-able.
"""

import numpy as np

from .errors import ParseError


def _format_float(v: float) -> str:
    return repr(float(v))


def write_matrix_stack(path, x: np.ndarray) -> None:
    """Write an (n, d1, d2) stack to a matrix-stack file."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 3:
        raise ParseError(f"expected (n, d1, d2) array, got shape {x.shape}")
    n, d1, d2 = x.shape
    with open(path, "w") as fh:
        fh.write(f"{n} {d1} {d2}\n")
        for block in x:
            for row in block:
                fh.write(" ".join(_format_float(v) for v in row))
                fh.write("\n")


def read_matrix_stack(path) -> np.ndarray:
    """Parse a matrix-stack file into an (n, d1, d2) array."""
    with open(path) as fh:
        lines = fh.readlines()
    pos = 0
    while pos < len(lines) and lines[pos].lstrip().startswith("#"):
        pos += 1
    if pos >= len(lines):
        raise ParseError("missing header line")
    header = lines[pos].split()
    pos += 1
    if len(header) != 3:
        raise ParseError(f"header must be 'N d1 d2', got {lines[pos - 1]!r}")
    try:
        n, d1, d2 = (int(tok) for tok in header)
    except ValueError as exc:
        raise ParseError(f"bad header: {exc}") from exc
    if n < 1 or d1 < 1 or d2 < 1:
        raise ParseError(f"header counts must be positive, got {n} {d1} {d2}")
    rows = []
    for line in lines[pos:]:
        if not line.strip():
            continue
        toks = line.split()
        if len(toks) != d2:
            raise ParseError(f"expected {d2} values per row, got {len(toks)}")
        try:
            row = [float(tok) for tok in toks]
        except ValueError as exc:
            raise ParseError(f"bad float token: {exc}") from exc
        if not all(np.isfinite(row)):
            raise ParseError("non-finite value in data")
        rows.append(row)
    if len(rows) != n * d1:
        raise ParseError(f"expected {n * d1} data rows, got {len(rows)}")
    return np.array(rows, dtype=float).reshape(n, d1, d2)
