"""Text storage of SPD matrix collections.

One record per line: the column-major ``vec`` of a ``p x p`` matrix as
``p^2`` comma-separated numbers, optionally preceded by a class label.
Lines starting with ``#`` are comments. Values are written with Python's
shortest round-trip repr, so reading back is lossless.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import EllWishartError, NotPositiveDefiniteError
from .linalg import check_spd

__all__ = ["DatasetFormatError", "read_matrix_file", "write_matrix_file", "format_float"]

#: Symmetry tolerance applied to decoded records.
RECORD_SYMMETRY_RTOL = 1e-8


class DatasetFormatError(EllWishartError, ValueError):
    """A matrix file is unreadable or a record has the wrong shape."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class RecordNotSPDError(NotPositiveDefiniteError):
    """A decoded record is not symmetric positive definite."""

    def __init__(self, message, record):
        super().__init__(message)
        self.record = record


def format_float(x):
    return repr(float(x))


def write_matrix_file(path, matrices, labels=None, header: Optional[str] = None):
    """Write ``(K, p, p)`` matrices, one column-major record per line."""
    mats = np.asarray(matrices, dtype=float)
    if mats.ndim == 2:
        mats = mats[None]
    k = mats.shape[0]
    if labels is not None and len(labels) != k:
        raise ValueError("need one label per matrix")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for i in range(k):
            fields = [format_float(v) for v in mats[i].reshape(-1, order="F")]
            if labels is not None:
                fields.insert(0, str(labels[i]))
            fh.write(",".join(fields) + "\n")


def read_matrix_file(path, p, labeled=False, check=True):
    """Read a matrix file.

    Returns
    -------
    labels : list of str or None
    matrices : numpy.ndarray, shape (K, p, p)

    Raises
    ------
    DatasetFormatError
        Unreadable file, wrong field count or non-numeric field.
    RecordNotSPDError
        A record fails the SPD check; ``record`` is its 0-based index.
    """
    width = p * p + (1 if labeled else 0)
    labels, rows = [], []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DatasetFormatError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            rec = len(rows)
            if len(fields) != width:
                raise DatasetFormatError(
                    f"{path}:{lineno}: record {rec} has {len(fields)} fields, expected {width}",
                    record=rec)
            if labeled:
                labels.append(fields.pop(0))
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                raise DatasetFormatError(
                    f"{path}:{lineno}: record {rec} has a non-numeric field", record=rec) from None
    mats = np.array(rows, dtype=float).reshape(len(rows), p * p)
    mats = mats.reshape(len(rows), p, p).transpose(0, 2, 1).copy()
    if check:
        for i, m in enumerate(mats):
            try:
                check_spd(m, sym_rtol=RECORD_SYMMETRY_RTOL, name=f"record {i}")
            except NotPositiveDefiniteError as exc:
                raise RecordNotSPDError(f"{path}: {exc}", record=i) from None
    return (labels if labeled else None), mats
