"""Matrix file formats: Matrix Market dense complex and a small JSON schema.

JSON layout::

    {"rows": n, "cols": m, "re": [...], "im": [...]}

with entries in row-major order. Floats are written with ``repr`` which is the
shortest decimal string that round-trips bit-exactly (never more than 17
significant digits).
"""

import io
import json
from pathlib import Path

import numpy as np
import scipy.io

from .errors import InvalidInputError
from .numcore import as_matrix

__all__ = ["matrix_to_json", "matrix_from_json", "read_matrix", "write_matrix"]


def matrix_to_json(M) -> dict:
    A = np.asarray(M, dtype=np.complex128)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    rows, cols = A.shape
    flat = A.reshape(-1)
    return {
        "rows": int(rows),
        "cols": int(cols),
        "re": [float(x) for x in flat.real],
        "im": [float(x) for x in flat.imag],
    }


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", [0.0] * len(obj["re"])), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed matrix JSON: {exc}") from exc
    if rows <= 0 or cols <= 0 or re.size != rows * cols or im.size != rows * cols:
        raise InvalidInputError("matrix JSON entry count does not match rows*cols")
    return as_matrix((re + 1j * im).reshape(rows, cols))


def read_matrix(path) -> np.ndarray:
    """Read a ``.json`` matrix or a Matrix Market array file."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: invalid JSON: {exc}") from exc
        return matrix_from_json(obj)
    if not text.startswith("%%MatrixMarket"):
        raise InvalidInputError(f"{path}: neither JSON nor Matrix Market")
    try:
        A = scipy.io.mmread(io.StringIO(text))
    except Exception as exc:
        raise InvalidInputError(f"{path}: unreadable Matrix Market file: {exc}") from exc
    if hasattr(A, "toarray"):
        A = A.toarray()
    return as_matrix(A)


def write_matrix(path, M):
    """Write `M` as JSON (``.json`` suffix) or Matrix Market ``array complex general``."""
    path = Path(path)
    A = np.asarray(M, dtype=np.complex128)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(matrix_to_json(A)) + "\n")
        return
    buf = io.BytesIO()
    scipy.io.mmwrite(buf, A, field="complex", precision=17)
    path.write_bytes(buf.getvalue())
