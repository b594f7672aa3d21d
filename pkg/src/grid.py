"""
Categorical raster fields, their indicator representation and the plain-text grid format.

Grid file (UTF-8):
    nrows <int>
    ncols <int>
    cellsize <float>
    nclasses <int>
    <nrows lines of ncols whitespace-separated labels in 1..K>
"""

import math
from dataclasses import dataclass
from typing import IO, Iterable, List, Tuple

import numpy as np

from .errors import ClassOutOfRangeError, GridFormatError, InputError

HEADER_KEYS = ("nrows", "ncols", "cellsize", "nclasses")


@dataclass(frozen=True)
class CategoricalGrid:
    """2D lattice of class labels 1..K; labels is an (nrows, ncols) integer array."""
    labels: np.ndarray
    cellsize: float
    nclasses: int

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        if labels.ndim != 2 or labels.shape[0] < 1 or labels.shape[1] < 1:
            raise InputError(f"labels must be a non-empty 2D array, got shape {labels.shape}")
        if self.nclasses < 2:
            raise InputError(f"nclasses must be >= 2, got {self.nclasses}")
        if not (self.cellsize > 0 and math.isfinite(self.cellsize)):
            raise InputError(f"cellsize must be positive, got {self.cellsize}")
        bad = (labels < 1) | (labels > self.nclasses)
        if bad.any():
            raise ClassOutOfRangeError(int(labels[bad][0]), self.nclasses)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "cellsize", float(self.cellsize))

    @classmethod
    def from_array(cls, labels: Iterable, cellsize: float = 1.0, nclasses: int = None) -> "CategoricalGrid":
        """Build a grid from a nested list/array; nclasses defaults to max(label), at least 2."""
        arr = np.asarray(labels, dtype=np.int64)
        if nclasses is None:
            nclasses = max(2, int(arr.max()))
        return cls(labels=arr, cellsize=cellsize, nclasses=nclasses)

    @property
    def nrows(self) -> int:
        return self.labels.shape[0]

    @property
    def ncols(self) -> int:
        return self.labels.shape[1]

    @property
    def ncells(self) -> int:
        return self.labels.size

    @property
    def area(self) -> float:
        """Total map area in squared map units."""
        return self.ncells * self.cellsize ** 2

    def check_class(self, k: int) -> int:
        """Return k if it is a legal label, else raise ClassOutOfRangeError."""
        if not 1 <= int(k) <= self.nclasses:
            raise ClassOutOfRangeError(int(k), self.nclasses)
        return int(k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CategoricalGrid):
            return NotImplemented
        return (
            self.nclasses == other.nclasses
            and self.cellsize == other.cellsize
            and np.array_equal(self.labels, other.labels)
        )



@dataclass(frozen=True)
class IndicatorField:
    """I_k(x): 1 where the grid holds class k, 0 elsewhere."""
    values: np.ndarray
    classlabel: int

    @property
    def nrows(self) -> int:
        return self.values.shape[0]

    @property
    def ncols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LagVector:
    """Cell offset h = (drow, dcol) with its Euclidean length in map units."""
    drow: int
    dcol: int
    cellsize: float = 1.0

    @classmethod
    def zero(cls, cellsize: float = 1.0) -> "LagVector":
        return cls(0, 0, cellsize)

    @property
    def is_zero(self) -> bool:
        return self.drow == 0 and self.dcol == 0

    @property
    def distance(self) -> float:
        return self.cellsize * math.hypot(self.drow, self.dcol)

    @property
    def direction(self) -> float:
        """Angle phi in [0, 2*pi), measured from the +column axis towards +row."""
        if self.is_zero:
            return 0.0
        return math.atan2(self.drow, self.dcol) % (2 * math.pi)

    def scaled(self, m: int) -> "LagVector":
        return LagVector(self.drow * m, self.dcol * m, self.cellsize)

    def reversed(self) -> "LagVector":
        return LagVector(-self.drow, -self.dcol, self.cellsize)


def indicator(grid: CategoricalGrid, k: int) -> IndicatorField:
    """Indicator field of class k."""
    k = grid.check_class(k)
    values = (grid.labels == k).astype(np.int8)
    values.setflags(write=False)
    return IndicatorField(values=values, classlabel=k)


def class_counts(grid: CategoricalGrid) -> np.ndarray:
    """Integer cell count per class 1..K (index k-1)."""
    return np.bincount(grid.labels.ravel() - 1, minlength=grid.nclasses).astype(np.int64)


def proportions(grid: CategoricalGrid) -> np.ndarray:
    """Class proportions pi_k; absent classes get 0."""
    return class_counts(grid) / grid.ncells


def _parse_header(lines: List[Tuple[int, str]]) -> dict:
    header = {}
    for expected, (lineno, text) in zip(HEADER_KEYS, lines):
        tokens = text.split()
        if len(tokens) != 2:
            raise GridFormatError(f"malformed header, expected '{expected} <value>'", lineno)
        key, value = tokens
        if key != expected:
            raise GridFormatError(f"malformed header, expected '{expected}' but found '{key}'", lineno)
        try:
            header[key] = float(value) if key == "cellsize" else int(value)
        except ValueError:
            raise GridFormatError(f"malformed header value for {key}: {value!r}", lineno) from None
    if len(header) < len(HEADER_KEYS):
        raise GridFormatError("malformed header: file ends inside the header", len(lines) + 1)
    if header["nrows"] < 1 or header["ncols"] < 1:
        raise GridFormatError("malformed header: nrows and ncols must be positive", 1)
    if not (math.isfinite(header["cellsize"]) and header["cellsize"] > 0):
        raise GridFormatError("malformed header: cellsize must be positive and finite", 3)
    if header["nclasses"] < 2:
        raise GridFormatError("malformed header: nclasses must be >= 2", 4)
    return header


def load_grid(source: IO[str]) -> CategoricalGrid:
    """
    Parse a grid from a text stream.

    Raises:
        GridFormatError: malformed header, bad token, row length mismatch, trailing garbage
        ClassOutOfRangeError: label outside 1..K (with its line number)
    """
    numbered = [(i, line.rstrip("\n")) for i, line in enumerate(source, start=1)]
    header = _parse_header(numbered[:4])
    nrows, ncols, nclasses = header["nrows"], header["ncols"], header["nclasses"]

    body = numbered[4:]
    labels = np.empty((nrows, ncols), dtype=np.int64)
    for r in range(nrows):
        if r >= len(body):
            raise GridFormatError(f"expected {nrows} rows, found {r}", len(numbered) + 1)
        lineno, text = body[r]
        tokens = text.split()
        if len(tokens) != ncols:
            raise GridFormatError(f"row length mismatch: expected {ncols} labels, found {len(tokens)}", lineno)
        for c, token in enumerate(tokens):
            try:
                value = int(token)
            except ValueError:
                raise GridFormatError(f"non-integer label {token!r}", lineno) from None
            if not 1 <= value <= nclasses:
                raise ClassOutOfRangeError(value, nclasses, lineno)
            labels[r, c] = value

    for lineno, text in body[nrows:]:
        if text.strip():
            raise GridFormatError("trailing garbage after the last row", lineno)

    return CategoricalGrid(labels=labels, cellsize=header["cellsize"], nclasses=nclasses)


def save_grid(grid: CategoricalGrid, target: IO[str]) -> None:
    """Write a grid in the plain-text format; cellsize uses repr for an exact round trip."""
    target.write(f"nrows {grid.nrows}\n")
    target.write(f"ncols {grid.ncols}\n")
    target.write(f"cellsize {grid.cellsize!r}\n")
    target.write(f"nclasses {grid.nclasses}\n")
    for row in grid.labels:
        target.write(" ".join(str(int(v)) for v in row) + "\n")


def read_grid_file(path: str) -> CategoricalGrid:
    with open(path, "r", encoding="utf-8") as f:
        return load_grid(f)


def write_grid_file(grid: CategoricalGrid, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        save_grid(grid, f)
