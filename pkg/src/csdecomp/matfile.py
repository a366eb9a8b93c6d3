"""Plain-text matrix files.

Layout: a header line ``m n``, then ``m`` lines of ``n`` numbers. A complex
matrix adds a line ``imag`` followed by a second ``m x n`` grid holding the
imaginary parts. Entries are written with 17 significant digits, which is
enough for every finite double to read back bit-for-bit.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InvalidInputError


class MatrixFileError(InvalidInputError):
    """The file is missing, unreadable or malformed."""


def _fmt_grid(a: np.ndarray) -> list[str]:
    return [" ".join(format(float(v), ".17g") for v in row) for row in a]


def format_matrix(a) -> str:
    a = np.asarray(a)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise InvalidInputError(f"format_matrix: expected a 2-d array, got {a.ndim} dims")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("format_matrix: non-finite entries")
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    if np.iscomplexobj(a):
        lines += _fmt_grid(a.real)
        lines.append("imag")
        lines += _fmt_grid(a.imag)
    else:
        lines += _fmt_grid(a)
    return "\n".join(lines) + "\n"


def _read_grid(lines: list[str], start: int, m: int, n: int) -> np.ndarray:
    if n == 0:
        # rows with no entries are blank lines and were dropped
        return np.empty((m, 0))
    if len(lines) < start + m:
        raise MatrixFileError(f"expected {m} rows, found {max(len(lines) - start, 0)}")
    out = np.empty((m, n))
    for r in range(m):
        toks = lines[start + r].split()
        if len(toks) != n:
            raise MatrixFileError(f"row {r + 1}: expected {n} entries, found {len(toks)}")
        try:
            out[r] = [float(t) for t in toks]
        except ValueError as exc:
            raise MatrixFileError(f"row {r + 1}: {exc}") from None
    if not np.all(np.isfinite(out)):
        raise MatrixFileError("non-finite entries")
    return out


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MatrixFileError("empty matrix file")
    head = lines[0].split()
    try:
        m, n = (int(t) for t in head)
    except ValueError:
        raise MatrixFileError(f"malformed header {lines[0]!r}, expected 'm n'") from None
    if m < 0 or n < 0:
        raise MatrixFileError("negative dimensions in header")
    rows = m if n else 0
    re = _read_grid(lines, 1, m, n)
    rest = lines[1 + rows:]
    if not rest:
        return re
    if rest[0].strip() != "imag" or len(rest) != rows + 1:
        raise MatrixFileError("unexpected content after the matrix")
    # assign the parts; re + 1j * im would lose the sign of -0.0
    out = np.empty((m, n), dtype=complex)
    out.real = re
    out.imag = _read_grid(rest, 1, m, n)
    return out


def read_matrix(path) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise MatrixFileError(f"cannot read {path}: {exc}") from None
    try:
        return parse_matrix(text)
    except MatrixFileError as exc:
        raise MatrixFileError(f"{path}: {exc}") from None


def write_matrix(path, a) -> None:
    Path(path).write_text(format_matrix(a))
