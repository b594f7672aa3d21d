"""
Stationary Gaussian random fields on a lattice, their truncation into categorical maps,
and the theoretical auto-transiogram of an excursion set {Z >= z}.

Two simulation paths are available:

- dense: Cholesky factor of the full covariance matrix (exact; small lattices)
- circulant: periodic embedding diagonalised by the 2D FFT (large lattices); the
  embedding grows until its eigenvalues are non-negative or a size limit is reached
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator
from scipy import fft, linalg
from scipy.spatial.distance import cdist

from .errors import EmbeddingError, InputError
from .grid import CategoricalGrid
from .seeded_rng import SeededRNG
from .validity import indicator_variogram_from_correlogram, normal_cdf, normal_ppf

logger = logging.getLogger(__name__)

METHOD_AUTO = "auto"
METHOD_DENSE = "dense"
METHOD_CIRCULANT = "circulant"
SIMULATION_METHODS = (METHOD_AUTO, METHOD_DENSE, METHOD_CIRCULANT)


class CorrelogramFamily(str, Enum):
    EXPONENTIAL = "exponential"
    GAUSSIAN = "gaussian"
    SPHERICAL = "spherical"


class CorrelogramSpec(BaseModel):
    """Unit-variance correlogram rho(h) of the latent field."""
    family: CorrelogramFamily = CorrelogramFamily.EXPONENTIAL
    range: float = Field(..., gt=0)

    model_config = {"frozen": True}

    @field_validator("family", mode="before")
    @classmethod
    def normalize_family(cls, v):
        if isinstance(v, str):
            return v.strip().lower()
        return v


def correlogram(spec: CorrelogramSpec, h):
    """rho(h): exp(-h/a), exp(-(h/a)^2) or 1 - 1.5 t + 0.5 t^3 (t = h/a <= 1, else 0)."""
    harr = np.asarray(h, dtype=float)
    if np.any(harr < 0):
        raise InputError(f"distance must be >= 0, got {h!r}")
    t = harr / spec.range
    if spec.family is CorrelogramFamily.EXPONENTIAL:
        rho = np.exp(-t)
    elif spec.family is CorrelogramFamily.GAUSSIAN:
        rho = np.exp(-(t * t))
    else:
        s = np.minimum(t, 1.0)
        rho = np.where(t >= 1.0, 0.0, 1.0 - 1.5 * s + 0.5 * s ** 3)
    return float(rho) if rho.ndim == 0 else rho


class ThresholdSet(BaseModel):
    """Cutoffs z_1 < ... < z_{K-1}; class j holds z_{j-1} <= Z < z_j."""
    cutoffs: List[float] = Field(..., min_length=1)

    @field_validator("cutoffs")
    @classmethod
    def validate_increasing(cls, v: List[float]) -> List[float]:
        """Cutoffs must be strictly increasing."""
        if any(np.isnan(z) for z in v):
            raise ValueError("cutoffs must not be NaN")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError(f"cutoffs must be strictly increasing: {v}")
        return v

    @property
    def nclasses(self) -> int:
        return len(self.cutoffs) + 1

    def proportions(self) -> np.ndarray:
        """Target class proportions implied by Phi."""
        edges = np.concatenate([[-np.inf], self.cutoffs, [np.inf]])
        return np.diff(normal_cdf(edges))

    @classmethod
    def from_proportions(cls, proportions: Sequence[float]) -> "ThresholdSet":
        """z_j = Phi^-1(p_1 + ... + p_j)."""
        p = np.asarray(proportions, dtype=float)
        if p.size < 2 or np.any(p <= 0):
            raise InputError(f"need at least two positive proportions, got {list(proportions)}")
        if abs(p.sum() - 1.0) > 1e-9:
            raise InputError(f"proportions must sum to 1, got {p.sum()!r}")
        return cls(cutoffs=[float(z) for z in normal_ppf(np.cumsum(p)[:-1])])


@dataclass(frozen=True)
class GaussianField:
    """Simulated field values (nrows, ncols) with the parameters that produced them."""
    values: np.ndarray
    cellsize: float
    spec: CorrelogramSpec
    seed: Optional[int]
    method: str
    embedding: Optional[tuple] = None

    @property
    def shape(self):
        return self.values.shape


def _dense_factor(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; clipped eigen-decomposition when the matrix is numerically singular."""
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        logger.debug("Cholesky failed, falling back to eigen-decomposition")
        w, v = linalg.eigh(cov)
        return v * np.sqrt(np.clip(w, 0.0, None))


def _simulate_dense(nrows: int, ncols: int, cellsize: float, spec: CorrelogramSpec,
                    rng: SeededRNG) -> np.ndarray:
    rows, cols = np.meshgrid(np.arange(nrows), np.arange(ncols), indexing="ij")
    coords = np.column_stack([rows.ravel(), cols.ravel()]) * cellsize
    cov = correlogram(spec, cdist(coords, coords))
    factor = _dense_factor(np.atleast_2d(cov))
    xi = rng.standard_normal_rows(nrows, ncols).ravel()
    return (factor @ xi).reshape(nrows, ncols)


def _embedding_eigenvalues(mr: int, mc: int, cellsize: float, spec: CorrelogramSpec) -> np.ndarray:
    """Eigenvalues of the block-circulant embedding (real FFT of the wrapped covariance)."""
    i = np.arange(mr)
    j = np.arange(mc)
    di = np.minimum(i, mr - i)[:, None]
    dj = np.minimum(j, mc - j)[None, :]
    base = correlogram(spec, cellsize * np.hypot(di, dj))
    return np.real(fft.fft2(base))


def _simulate_circulant(nrows: int, ncols: int, cellsize: float, spec: CorrelogramSpec,
                        rng: SeededRNG, max_factor: int, tol: float = 1e-10):
    mr = fft.next_fast_len(2 * nrows)
    mc = fft.next_fast_len(2 * ncols)
    limit_r, limit_c = max_factor * 2 * nrows, max_factor * 2 * ncols

    while True:
        lam = _embedding_eigenvalues(mr, mc, cellsize, spec)
        lam_min, lam_max = float(lam.min()), float(lam.max())
        if lam_min >= -tol * lam_max:
            break
        if mr >= limit_r and mc >= limit_c:
            raise EmbeddingError(
                f"no non-negative circulant embedding up to {mr}x{mc} for {spec.family.value} "
                f"correlogram (range {spec.range:g}); smallest eigenvalue {lam_min:.3e}"
            )
        logger.debug("embedding %dx%d has eigenvalue %.3e, growing", mr, mc, lam_min)
        mr = min(fft.next_fast_len(mr + 1 + mr // 2), max(limit_r, mr))
        mc = min(fft.next_fast_len(mc + 1 + mc // 2), max(limit_c, mc))

    lam = np.clip(lam, 0.0, None)
    normals = rng.standard_normal_rows(mr, 2 * mc)
    xi = normals[:, :mc] + 1j * normals[:, mc:]
    field = fft.fft2(np.sqrt(lam / (mr * mc)) * xi)
    return np.real(field[:nrows, :ncols]), (mr, mc)


def simulate_grf(nrows: int, ncols: int, cellsize: float, spec: CorrelogramSpec,
                 seed: Optional[int] = 0, method: str = METHOD_AUTO,
                 dense_max_cells: int = 4096, max_embedding_factor: int = 4) -> GaussianField:
    """
    Zero-mean, unit-variance stationary Gaussian field on an nrows x ncols lattice.

    Args:
        nrows, ncols: Lattice dimensions
        cellsize: Cell edge length in map units
        spec: Correlogram of the field
        seed: Seed of the Philox streams (one per lattice row)
        method: auto (dense up to dense_max_cells cells), dense or circulant
        dense_max_cells: Largest lattice simulated by the dense path under auto
        max_embedding_factor: Circulant embedding may grow up to this multiple of 2n per axis

    Raises:
        EmbeddingError: no non-negative circulant embedding within the size limit
    """
    if nrows < 1 or ncols < 1:
        raise InputError(f"lattice dimensions must be positive, got {nrows}x{ncols}")
    if cellsize <= 0:
        raise InputError(f"cellsize must be > 0, got {cellsize!r}")
    if method not in SIMULATION_METHODS:
        raise InputError(f"unknown simulation method {method!r}; choose from {', '.join(SIMULATION_METHODS)}")

    if method == METHOD_AUTO:
        method = METHOD_DENSE if nrows * ncols <= dense_max_cells else METHOD_CIRCULANT

    rng = SeededRNG(seed)
    embedding = None
    if method == METHOD_DENSE:
        values = _simulate_dense(nrows, ncols, cellsize, spec, rng)
    else:
        values, embedding = _simulate_circulant(nrows, ncols, cellsize, spec, rng, max_embedding_factor)

    logger.info("simulated %dx%d %s field (%s, seed=%s)", nrows, ncols, spec.family.value, method, seed)
    return GaussianField(values=values, cellsize=cellsize, spec=spec, seed=seed,
                         method=method, embedding=embedding)


def _field_values(field: Union[GaussianField, np.ndarray]):
    if isinstance(field, GaussianField):
        return field.values, field.cellsize
    return np.asarray(field, dtype=float), 1.0


def truncate(field: Union[GaussianField, np.ndarray], thresholds: ThresholdSet) -> CategoricalGrid:
    """label = 1 + number of cutoffs <= Z (so Z >= z_k lands in the upper class)."""
    values, cellsize = _field_values(field)
    labels = 1 + np.searchsorted(np.asarray(thresholds.cutoffs), values, side="right")
    return CategoricalGrid.from_array(labels, cellsize=cellsize, nclasses=thresholds.nclasses)


def truncate_to_proportions(field: Union[GaussianField, np.ndarray],
                            proportions: Sequence[float]) -> CategoricalGrid:
    """
    Truncate at empirical quantiles so the realised proportions hit the targets to
    within one cell per class.
    """
    p = np.asarray(proportions, dtype=float)
    if p.size < 2 or np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-9:
        raise InputError(f"proportions must be >= 2 positive values summing to 1, got {list(proportions)}")
    values, cellsize = _field_values(field)
    ordered = np.sort(values.ravel())
    n = ordered.size
    ranks = np.rint(np.cumsum(p)[:-1] * n).astype(int)
    cutoffs = np.where(ranks >= n, np.inf, ordered[np.minimum(ranks, n - 1)])
    labels = 1 + np.searchsorted(cutoffs, values, side="right")
    return CategoricalGrid.from_array(labels, cellsize=cellsize, nclasses=p.size)


def theoretical_auto_transiogram(spec: CorrelogramSpec, z: float, h):
    """
    Auto-transiogram of the excursion set {Z >= z}: 1 - gamma(rho(h), z) / pi_k with
    pi_k = 1 - Phi(z).

    Raises:
        InputError: pi_k = 0
    """
    p = float(1.0 - normal_cdf(z))
    if p <= 0.0:
        raise InputError(f"threshold z = {z!r} leaves an empty excursion set")
    rho = np.atleast_1d(correlogram(spec, h))
    values = np.array([1.0 - indicator_variogram_from_correlogram(float(min(1.0, r)), z) / p for r in rho])
    return float(values[0]) if np.ndim(h) == 0 else values.reshape(np.shape(h))
