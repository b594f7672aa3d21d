"""
Exhaustive-scan estimation of auto- and cross-transiograms.

Counting is integer-exact: for each lag, every in-bounds (tail, head) pair is tallied
into a K x K count matrix, and values are ntransitions / npairs per tail row. Pairs whose
head falls outside the map are discarded (no wraparound, no mirroring).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import CurveFormatError, InputError
from .grid import CategoricalGrid, LagVector, proportions

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["tail", "head", "drow", "dcol", "distance", "value", "npairs"]
CURVE_SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class TransiogramSample:
    """One estimate pi_hat_{head|tail}(h) with its pair counts."""
    tail: int
    head: int
    lag: Optional[LagVector]
    distance: float
    value: float
    npairs: int
    ntransitions: Optional[int] = None

    @property
    def defined(self) -> bool:
        return self.npairs > 0


@dataclass(frozen=True)
class LagScan:
    """Counts for a single lag vector: counts[k-1, k'-1] = #pairs tail k -> head k'."""
    lag: LagVector
    counts: np.ndarray

    @property
    def nclasses(self) -> int:
        return self.counts.shape[0]

    @property
    def npairs(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def values(self) -> np.ndarray:
        """K x K conditional relative frequencies, NaN rows where npairs = 0."""
        return _divide_rows(self.counts, self.npairs)

    def sample(self, tail: int, head: int) -> TransiogramSample:
        npairs = int(self.npairs[tail - 1])
        return TransiogramSample(
            tail=tail, head=head, lag=self.lag, distance=self.lag.distance,
            value=float(self.values[tail - 1, head - 1]), npairs=npairs,
            ntransitions=int(self.counts[tail - 1, head - 1]),
        )

    def samples(self) -> List[List[TransiogramSample]]:
        K = self.nclasses
        return [[self.sample(k, kp) for kp in range(1, K + 1)] for k in range(1, K + 1)]


@dataclass(frozen=True)
class EmpiricalTransiogram:
    """
    K x K family of transiogram samples over an ordered list of lags.

    values[k-1, k'-1, i] is NaN wherever npairs[k-1, i] == 0. ntransitions is kept when
    the curve comes from a scan (integer counts); curves loaded from CSV or built from
    synthetic values carry values and npairs only.
    """
    values: np.ndarray
    npairs: np.ndarray
    distances: np.ndarray
    lags: Tuple[Optional[LagVector], ...]
    ntransitions: Optional[np.ndarray] = None
    bin_edges: Optional[np.ndarray] = None
    kind: str = "directional"

    @classmethod
    def from_counts(cls, counts: np.ndarray, distances: Sequence[float],
                    lags: Sequence[Optional[LagVector]], kind: str = "directional",
                    bin_edges: Optional[np.ndarray] = None) -> "EmpiricalTransiogram":
        counts = np.asarray(counts, dtype=np.int64)
        npairs = counts.sum(axis=1)
        values = np.stack(
            [_divide_rows(counts[:, :, i], npairs[:, i]) for i in range(counts.shape[2])], axis=2
        ) if counts.shape[2] else np.zeros(counts.shape)
        return cls(values=values, npairs=npairs, distances=np.asarray(distances, dtype=float),
                   lags=tuple(lags), ntransitions=counts, bin_edges=bin_edges, kind=kind)

    @classmethod
    def from_values(cls, values: np.ndarray, distances: Sequence[float],
                    npairs: Optional[np.ndarray] = None) -> "EmpiricalTransiogram":
        """Curve from precomputed values (K, K, L); npairs defaults to 1 where the tail row is finite."""
        values = np.asarray(values, dtype=float)
        K, _, L = values.shape
        if npairs is None:
            npairs = np.where(np.isfinite(values).all(axis=1), 1, 0)
        npairs = np.asarray(npairs, dtype=np.int64).reshape(K, L)
        values = np.where(npairs[:, None, :] > 0, values, np.nan)
        return cls(values=values, npairs=npairs, distances=np.asarray(distances, dtype=float),
                   lags=(None,) * L, kind="table")

    @property
    def nclasses(self) -> int:
        return self.values.shape[0]

    @property
    def nlags(self) -> int:
        return self.values.shape[2]

    @property
    def defined(self) -> np.ndarray:
        """(K, L) mask of tail rows with at least one pair."""
        return self.npairs > 0

    @property
    def direction(self) -> Optional[float]:
        """Direction of a directional curve (angle of its first lag)."""
        if self.kind != "directional" or not self.lags or self.lags[0] is None:
            return None
        return self.lags[0].direction

    def sample(self, tail: int, head: int, i: int) -> TransiogramSample:
        nt = None if self.ntransitions is None else int(self.ntransitions[tail - 1, head - 1, i])
        return TransiogramSample(
            tail=tail, head=head, lag=self.lags[i], distance=float(self.distances[i]),
            value=float(self.values[tail - 1, head - 1, i]),
            npairs=int(self.npairs[tail - 1, i]), ntransitions=nt,
        )

    def curve(self, tail: int, head: int) -> np.ndarray:
        return self.values[tail - 1, head - 1, :]


def _divide_rows(counts: np.ndarray, npairs: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        values = counts / npairs[:, None]
    values[npairs == 0, :] = np.nan
    return values


def _pair_counts(labels: np.ndarray, nclasses: int, drow: int, dcol: int) -> np.ndarray:
    """K x K transition counts for offset (drow, dcol) over all in-bounds pairs."""
    nrows, ncols = labels.shape
    counts = np.zeros((nclasses, nclasses), dtype=np.int64)
    if abs(drow) >= nrows or abs(dcol) >= ncols:
        return counts

    r0, r1 = max(0, -drow), nrows - max(0, drow)
    c0, c1 = max(0, -dcol), ncols - max(0, dcol)
    tail = labels[r0:r1, c0:c1]
    head = labels[r0 + drow:r1 + drow, c0 + dcol:c1 + dcol]
    index = (tail - 1) * nclasses + (head - 1)
    counts += np.bincount(index.ravel(), minlength=nclasses * nclasses).reshape(nclasses, nclasses)
    return counts


def scan_lag(grid: CategoricalGrid, lag: LagVector) -> LagScan:
    """Exhaustive scan of every in-bounds pair separated by `lag`."""
    counts = _pair_counts(grid.labels, grid.nclasses, lag.drow, lag.dcol)
    return LagScan(lag=LagVector(lag.drow, lag.dcol, grid.cellsize), counts=counts)


def scan_lag_global_norm(grid: CategoricalGrid, lag: LagVector) -> np.ndarray:
    """
    Literal whole-map normalisation: sum i_k(x) i_k'(x+h) / (pi_k N(h)).

    pi_k is the map proportion and N(h) the total number of in-bounds pairs, so rows do
    not sum to 1 near borders. Tails with pi_k = 0 (or an empty pair set) are NaN.
    """
    counts = _pair_counts(grid.labels, grid.nclasses, lag.drow, lag.dcol)
    total = counts.sum()
    pi = proportions(grid)
    denom = pi * total
    with np.errstate(invalid="ignore", divide="ignore"):
        values = counts / denom[:, None]
    values[denom == 0, :] = np.nan
    return values


def _scan_many(grid: CategoricalGrid, offsets: Sequence[Tuple[int, int]], workers: int) -> List[np.ndarray]:
    def count(offset):
        return _pair_counts(grid.labels, grid.nclasses, offset[0], offset[1])

    if workers <= 1 or len(offsets) <= 1:
        return [count(o) for o in offsets]
    # map() keeps input order, so the merge is the same under any schedule
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(count, offsets))


def directional_curve(grid: CategoricalGrid, step: Union[LagVector, Tuple[int, int]],
                      maxlag: int, workers: int = 1) -> EmpiricalTransiogram:
    """
    Scan lags step, 2*step, ..., maxlag*step.

    Args:
        grid: Categorical field
        step: Unit cell step giving the direction, e.g. (0, 1) or (1, 1)
        maxlag: Number of multiples of the step (>= 1)
        workers: Threads used to partition the lags; results do not depend on it
    """
    if maxlag < 1:
        raise InputError(f"maxlag must be >= 1, got {maxlag}")
    if not isinstance(step, LagVector):
        step = LagVector(int(step[0]), int(step[1]), grid.cellsize)
    if step.is_zero:
        raise InputError("direction step must be a non-zero cell offset")

    lags = [LagVector(step.drow * m, step.dcol * m, grid.cellsize) for m in range(1, maxlag + 1)]
    counts = _scan_many(grid, [(l.drow, l.dcol) for l in lags], workers)
    logger.debug("directional scan step=(%d,%d) maxlag=%d", step.drow, step.dcol, maxlag)
    return EmpiricalTransiogram.from_counts(
        np.stack(counts, axis=2), [l.distance for l in lags], lags, kind="directional"
    )


def omnidirectional_curve(grid: CategoricalGrid, binedges: Sequence[float],
                          workers: int = 1) -> EmpiricalTransiogram:
    """
    Pool counts of every integer offset whose distance falls in [edge_i, edge_i+1).

    Both h and -h enter a bin as distinct ordered offsets. Counts are summed before
    dividing, so each bin keeps the unit-sum property. The recorded distance of a bin is
    its midpoint; bins with no representable offset are undefined.
    """
    edges = np.asarray(binedges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise InputError("binedges needs at least two increasing distances")
    if not np.all(np.diff(edges) > 0):
        raise InputError("binedges must be strictly increasing")
    if edges[0] <= 0:
        raise InputError("binedges must start above zero")

    c = grid.cellsize
    reach_r = min(grid.nrows - 1, int(math.floor(edges[-1] / c)))
    reach_c = min(grid.ncols - 1, int(math.floor(edges[-1] / c)))
    nbins = edges.size - 1
    members: List[List[Tuple[int, int]]] = [[] for _ in range(nbins)]
    for dr in range(-reach_r, reach_r + 1):
        for dc in range(-reach_c, reach_c + 1):
            d = c * math.hypot(dr, dc)
            b = int(np.searchsorted(edges, d, side="right")) - 1
            if 0 <= b < nbins and (dr, dc) != (0, 0):
                members[b].append((dr, dc))

    flat = [o for group in members for o in group]
    scanned = dict(zip(flat, _scan_many(grid, flat, workers)))
    K = grid.nclasses
    counts = np.zeros((K, K, nbins), dtype=np.int64)
    for b, group in enumerate(members):
        for offset in group:
            counts[:, :, b] += scanned[offset]

    midpoints = 0.5 * (edges[:-1] + edges[1:])
    return EmpiricalTransiogram.from_counts(
        counts, midpoints, [None] * nbins, kind="omnidirectional", bin_edges=edges
    )


def reverse_curve(grid: CategoricalGrid, curve: EmpiricalTransiogram, workers: int = 1) -> EmpiricalTransiogram:
    """Rescan a directional curve at -h (the second input of the cross-variogram link)."""
    if curve.kind != "directional":
        raise InputError("only directional curves can be reversed")
    lags = [l.reversed() for l in curve.lags]
    counts = _scan_many(grid, [(l.drow, l.dcol) for l in lags], workers)
    return EmpiricalTransiogram.from_counts(
        np.stack(counts, axis=2), [l.distance for l in lags], lags, kind="directional"
    )


def curve_to_frame(curve: EmpiricalTransiogram) -> pd.DataFrame:
    """Long table in the curve CSV schema: one row per (tail, head, lag)."""
    rows = []
    K = curve.nclasses
    for k in range(1, K + 1):
        for kp in range(1, K + 1):
            for i in range(curve.nlags):
                lag = curve.lags[i]
                rows.append({
                    "tail": k,
                    "head": kp,
                    "drow": pd.NA if lag is None else lag.drow,
                    "dcol": pd.NA if lag is None else lag.dcol,
                    "distance": float(curve.distances[i]),
                    "value": float(curve.values[k - 1, kp - 1, i]),
                    "npairs": int(curve.npairs[k - 1, i]),
                })
    frame = pd.DataFrame(rows, columns=CURVE_COLUMNS)
    return frame.astype({"drow": "Int64", "dcol": "Int64"})


def write_curve_csv(curve: EmpiricalTransiogram, target: Union[str, IO[str]]) -> None:
    """Write the curve CSV; undefined values become empty fields."""
    curve_to_frame(curve).to_csv(target, index=False, na_rep="")


def _infer_cellsize(keys) -> float:
    """Map units per cell from the first non-zero directional lag; 1.0 when there is none."""
    for drow, dcol, distance in keys:
        if drow is not None and (drow or dcol):
            return distance / math.hypot(drow, dcol)
    return 1.0


def read_curve_csv(source: Union[str, IO[str]], unit_sum_tol: float = 1e-9) -> EmpiricalTransiogram:
    """
    Read a curve CSV back into an EmpiricalTransiogram.

    Rows flagged fitted=1 (fit output) are ignored. Lags are ordered by distance.

    Raises:
        CurveFormatError: missing columns, inconsistent npairs, or a defined tail row whose
            values do not sum to 1 within unit_sum_tol
    """
    try:
        frame = pd.read_csv(source, float_precision="round_trip",
                            dtype={"drow": "Int64", "dcol": "Int64"})
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise CurveFormatError(f"unreadable curve CSV: {e}") from e

    missing = [c for c in CURVE_COLUMNS if c not in frame.columns]
    if missing:
        raise CurveFormatError(f"curve CSV missing columns: {', '.join(missing)}")
    if "fitted" in frame.columns:
        frame = frame[frame["fitted"].fillna(0).astype(int) == 0]
    if frame.empty:
        raise CurveFormatError("curve CSV has no empirical rows")
    if frame["npairs"].isna().any():
        raise CurveFormatError("npairs must be present on every empirical row")

    K = int(max(frame["tail"].max(), frame["head"].max()))
    if frame["tail"].min() < 1 or frame["head"].min() < 1:
        raise CurveFormatError("tail/head labels must be >= 1")

    keys = []
    for drow, dcol, distance in zip(frame["drow"], frame["dcol"], frame["distance"]):
        key = (None if pd.isna(drow) else int(drow), None if pd.isna(dcol) else int(dcol), float(distance))
        if key not in keys:
            keys.append(key)
    keys.sort(key=lambda t: t[2])
    position = {key: i for i, key in enumerate(keys)}

    L = len(keys)
    values = np.full((K, K, L), np.nan)
    npairs = np.full((K, L), -1, dtype=np.int64)
    for row in frame.itertuples(index=False):
        key = (None if pd.isna(row.drow) else int(row.drow),
               None if pd.isna(row.dcol) else int(row.dcol), float(row.distance))
        i = position[key]
        k, kp = int(row.tail) - 1, int(row.head) - 1
        n = int(row.npairs)
        if npairs[k, i] not in (-1, n):
            raise CurveFormatError(f"inconsistent npairs for tail {k + 1} at distance {key[2]}")
        npairs[k, i] = n
        values[k, kp, i] = row.value

    npairs[npairs < 0] = 0
    for k in range(K):
        for i in range(L):
            if npairs[k, i] == 0:
                continue
            row = values[k, :, i]
            if not np.isfinite(row).all():
                raise CurveFormatError(f"tail {k + 1} at distance {keys[i][2]} has missing head values")
            if abs(row.sum() - 1.0) > unit_sum_tol:
                raise CurveFormatError(
                    f"unit-sum violated for tail {k + 1} at distance {keys[i][2]}: sum = {row.sum()!r}"
                )

    all_directional = all(key[0] is not None for key in keys)
    cellsize = _infer_cellsize(keys)
    lags = tuple(LagVector(key[0], key[1], cellsize) if key[0] is not None else None for key in keys)
    values = np.where(npairs[:, None, :] > 0, values, np.nan)
    # value = ntransitions / npairs, so the counts come back by rounding
    ntransitions = np.where(npairs[:, None, :] > 0,
                            np.rint(np.nan_to_num(values) * npairs[:, None, :]), 0).astype(np.int64)
    return EmpiricalTransiogram(
        values=values, npairs=npairs, distances=np.array([key[2] for key in keys]),
        lags=lags, ntransitions=ntransitions,
        kind="directional" if all_directional else "omnidirectional",
    )
