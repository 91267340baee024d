"""Dense query × gallery matrices with id mappings, plus file formats.

Two interchangeable serializations:

* text: comma-separated, header row of gallery ids (first cell empty),
  one leading query id per data row;
* binary "SIMM": magic ``SIMM``, version byte 1, u32 LE row/col counts,
  row-major f64 LE values, then two length-prefixed UTF-8 id lists
  (rows, then cols; each list is a u32 count followed by u32-length-
  prefixed ids).
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field

import numpy as np

from framebias.errors import AnnotationParseError, ShapeMismatchError

MAGIC = b"SIMM"
VERSION = 1


def _check_ids(ids: tuple[str, ...], side: str) -> None:
    if len(set(ids)) != len(ids):
        raise ShapeMismatchError(f"duplicate {side} ids")


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Scores for every (query, gallery) pair; values must be finite."""

    rows: tuple[str, ...]
    cols: tuple[str, ...]
    values: np.ndarray
    row_index: dict[str, int] = field(init=False, repr=False)
    col_index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.rows), len(self.cols)):
            raise ShapeMismatchError(
                f"values shape {values.shape} does not match {len(self.rows)}x{len(self.cols)} ids"
            )
        _check_ids(self.rows, "row")
        _check_ids(self.cols, "col")
        self._check_values(values)
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "row_index", {r: i for i, r in enumerate(self.rows)})
        object.__setattr__(self, "col_index", {c: j for j, c in enumerate(self.cols)})

    @staticmethod
    def _check_values(values: np.ndarray) -> None:
        if values.size and not np.all(np.isfinite(values)):
            raise ShapeMismatchError("matrix values must all be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def transposed(self):
        return type(self)(rows=self.cols, cols=self.rows, values=self.values.T)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimilarityMatrix):
            return NotImplemented
        return (
            type(self) is type(other)
            and self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class RelevancyMatrix(SimilarityMatrix):
    """Graded relevance in [0, 1] for every (query, gallery) pair."""

    @staticmethod
    def _check_values(values: np.ndarray) -> None:
        SimilarityMatrix._check_values(values)
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise ShapeMismatchError("relevancy values must lie in [0, 1]")


def to_text(matrix: SimilarityMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([""] + list(matrix.cols))
    for i, row_id in enumerate(matrix.rows):
        writer.writerow([row_id] + [repr(float(v)) for v in matrix.values[i]])
    return buf.getvalue()


def from_text(text: str, kind: str = "similarity") -> SimilarityMatrix:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise AnnotationParseError("empty matrix file") from None
    cols = tuple(header[1:])
    rows = []
    data = []
    for rec in reader:
        if not rec:
            continue
        if len(rec) != len(cols) + 1:
            raise AnnotationParseError(
                f"matrix line {reader.line_num}: expected {len(cols) + 1} fields, got {len(rec)}"
            )
        rows.append(rec[0])
        try:
            data.append([float(v) for v in rec[1:]])
        except ValueError:
            raise AnnotationParseError(f"matrix line {reader.line_num}: non-numeric value") from None
    cls = RelevancyMatrix if kind == "relevancy" else SimilarityMatrix
    return cls(rows=tuple(rows), cols=cols, values=np.array(data, dtype=np.float64).reshape(len(rows), len(cols)))


def _pack_ids(ids: tuple[str, ...]) -> bytes:
    parts = [struct.pack("<I", len(ids))]
    for s in ids:
        raw = s.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    return b"".join(parts)


def _unpack_ids(buf: bytes, offset: int) -> tuple[tuple[str, ...], int]:
    (count,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    ids = []
    for _ in range(count):
        (n,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        ids.append(buf[offset : offset + n].decode("utf-8"))
        offset += n
    return tuple(ids), offset


def to_binary(matrix: SimilarityMatrix) -> bytes:
    nrows, ncols = matrix.shape
    return b"".join(
        [
            MAGIC,
            bytes([VERSION]),
            struct.pack("<II", nrows, ncols),
            matrix.values.astype("<f8").tobytes(order="C"),
            _pack_ids(matrix.rows),
            _pack_ids(matrix.cols),
        ]
    )


def from_binary(buf: bytes, kind: str = "similarity") -> SimilarityMatrix:
    if buf[:4] != MAGIC:
        raise AnnotationParseError("not a SIMM matrix file (bad magic)")
    if buf[4] != VERSION:
        raise AnnotationParseError(f"unsupported SIMM version {buf[4]}")
    nrows, ncols = struct.unpack_from("<II", buf, 5)
    offset = 13
    nbytes = nrows * ncols * 8
    values = np.frombuffer(buf[offset : offset + nbytes], dtype="<f8").reshape(nrows, ncols)
    offset += nbytes
    rows, offset = _unpack_ids(buf, offset)
    cols, offset = _unpack_ids(buf, offset)
    if len(rows) != nrows or len(cols) != ncols:
        raise AnnotationParseError("SIMM id list lengths do not match matrix dimensions")
    cls = RelevancyMatrix if kind == "relevancy" else SimilarityMatrix
    return cls(rows=rows, cols=cols, values=values.astype(np.float64))


def save_matrix(matrix: SimilarityMatrix, path) -> None:
    """Write binary when the path ends in .simm, text otherwise."""
    path = str(path)
    if path.endswith(".simm"):
        with open(path, "wb") as fh:
            fh.write(to_binary(matrix))
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(to_text(matrix))


def load_matrix(path, kind: str = "similarity") -> SimilarityMatrix:
    """Read either format, sniffing the SIMM magic bytes."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] == MAGIC:
        return from_binary(raw, kind)
    return from_text(raw.decode("utf-8"), kind)
