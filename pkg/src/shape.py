"""
Shape metrics from the behaviour of auto-transiograms at the origin.

The perimeter-to-area ratio of class k (map area normalised to one) is
Psi_k = -1/2 * integral over phi in [0, 2pi) of the transition rate pi'_{k|k}(0; phi),
which reduces to Psi_k = -pi * rate for isotropic rates. A raster edge count gives an
independent (staircase-biased) oracle.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .empirical import EmpiricalTransiogram
from .errors import (
    FractalBoundaryError,
    InputError,
    NonPhysicalRateError,
    UndefinedSampleError,
)
from .grid import CategoricalGrid

logger = logging.getLogger(__name__)

METHOD_ISOTROPIC = "isotropic"
METHOD_DIRECTIONAL = "directional"
METHOD_RASTER = "raster-oracle"

DEFAULT_FRACTAL_THRESHOLD = 0.7


@dataclass(frozen=True)
class TransitionRate:
    """Slope of the auto-transiogram at the origin (per map unit) in one direction."""
    classlabel: int
    direction: Optional[float]
    rate: float
    stderr: float
    nlags: int = 1
    exponent: Optional[float] = None
    fractal: bool = False
    fractal_threshold: float = DEFAULT_FRACTAL_THRESHOLD


@dataclass(frozen=True)
class ShapeMetric:
    """Perimeter-to-area ratio of class k with the map area normalised to one."""
    classlabel: int
    psi: float
    method: str
    perimeter: Optional[float] = None
    area: Optional[float] = None
    rates: Tuple[TransitionRate, ...] = field(default_factory=tuple)


def _log_log_exponent(distances: np.ndarray, values: np.ndarray) -> Optional[float]:
    """Slope of log(1 - pi) against log(h); None when 1 - pi vanishes somewhere."""
    drop = 1.0 - values
    if distances.size < 2 or np.any(drop <= 0):
        return None
    slope, _ = np.polyfit(np.log(distances), np.log(drop), 1)
    return float(slope)


def rate_from_samples(distances: Sequence[float], values: Sequence[float], nlags: int = 1,
                      npairs: Optional[Sequence[int]] = None, classlabel: int = 1,
                      direction: Optional[float] = None,
                      fractal_threshold: float = DEFAULT_FRACTAL_THRESHOLD) -> TransitionRate:
    """
    Least-squares slope through the fixed point (0, 1) using the first nlags samples.

    rate = sum d_i (v_i - 1) / sum d_i^2, which for nlags = 1 is (v_1 - 1) / d_1.
    stderr is the residual standard error of the slope when nlags >= 2, and the binomial
    standard error of the first sample divided by d_1 when only one lag is used.

    Raises:
        InputError: nlags < 1 or fewer samples than nlags
        UndefinedSampleError: a NaN value among the first nlags samples
    """
    if nlags < 1:
        raise InputError(f"nlags must be >= 1, got {nlags}")
    d = np.asarray(distances, dtype=float)[:nlags]
    v = np.asarray(values, dtype=float)[:nlags]
    if d.size < nlags:
        raise InputError(f"need {nlags} lags, curve has {d.size}")
    if np.any(~np.isfinite(v)):
        raise UndefinedSampleError(f"undefined transiogram sample among the first {nlags} lags")
    if np.any(d <= 0):
        raise InputError("rate estimation needs positive lag distances")

    rate = float(np.sum(d * (v - 1.0)) / np.sum(d * d))

    if nlags >= 2:
        resid = v - 1.0 - rate * d
        stderr = float(math.sqrt(np.sum(resid ** 2) / (nlags - 1) / np.sum(d * d)))
    elif npairs is not None and npairs[0] > 0:
        p = float(v[0])
        stderr = math.sqrt(p * (1.0 - p) / npairs[0]) / float(d[0])
    else:
        stderr = float("nan")

    exponent = _log_log_exponent(d, v) if nlags >= 2 else None
    fractal = exponent is not None and exponent < fractal_threshold
    if fractal:
        logger.info("class %d: log-log exponent %.3f below %.2f, boundary flagged fractal",
                    classlabel, exponent, fractal_threshold)
    return TransitionRate(classlabel=classlabel, direction=direction, rate=rate, stderr=stderr,
                          nlags=nlags, exponent=exponent, fractal=fractal,
                          fractal_threshold=fractal_threshold)


def transition_rate(curve: EmpiricalTransiogram, k: int, direction: Optional[float] = None,
                    nlags: int = 1, fractal_threshold: float = DEFAULT_FRACTAL_THRESHOLD) -> TransitionRate:
    """
    Transition rate of class k from an empirical curve.

    Args:
        curve: Directional (or omnidirectional) empirical transiogram
        k: Class label
        direction: Angle of the curve; taken from the curve when omitted
        nlags: Number of smallest lags in the anchored fit
        fractal_threshold: Log-log exponent below which the boundary is flagged fractal
    """
    if not 1 <= k <= curve.nclasses:
        raise InputError(f"class {k} not in 1..{curve.nclasses}")
    curve_direction = curve.direction
    if direction is None:
        direction = curve_direction
    elif curve_direction is not None and not math.isclose(
            math.remainder(direction - curve_direction, 2 * math.pi), 0.0, abs_tol=1e-12):
        raise InputError(f"direction {direction!r} does not match the curve direction {curve_direction!r}")

    return rate_from_samples(
        curve.distances, curve.curve(k, k), nlags=nlags, npairs=curve.npairs[k - 1],
        classlabel=k, direction=direction, fractal_threshold=fractal_threshold,
    )


def _check_rate(rate: TransitionRate) -> None:
    if not math.isfinite(rate.rate):
        raise InputError(f"transition rate must be finite, got {rate.rate!r}")
    if rate.rate > 0:
        raise NonPhysicalRateError(
            f"positive transition rate {rate.rate!r} for class {rate.classlabel}: "
            f"an auto-transiogram cannot increase from 1 at the origin"
        )
    if rate.fractal:
        raise FractalBoundaryError(rate.exponent, rate.fractal_threshold)


def psi_isotropic(rate: TransitionRate) -> ShapeMetric:
    """Psi = -pi * rate."""
    _check_rate(rate)
    return ShapeMetric(classlabel=rate.classlabel, psi=-math.pi * rate.rate,
                       method=METHOD_ISOTROPIC, rates=(rate,))


def psi_directional(rates: Sequence[TransitionRate]) -> ShapeMetric:
    """
    Periodic trapezoid rule over [0, 2pi) for Psi = -1/2 * integral of rate(phi).

    Each rate contributes at phi and phi + pi (auto-transiograms are even in h). Rates
    given for the same direction modulo pi are averaged.

    Raises:
        InputError: fewer than 2 distinct directions, or a rate without a direction
        NonPhysicalRateError: any positive rate
    """
    if not rates:
        raise InputError("psi_directional needs at least two directions")
    for r in rates:
        if r.direction is None:
            raise InputError("directional rates need a direction angle")
        _check_rate(r)
    classes = {r.classlabel for r in rates}
    if len(classes) != 1:
        raise InputError(f"rates mix classes {sorted(classes)}")

    # directions equal modulo pi share one key
    grouped = {}
    for r in rates:
        key = round(r.direction % math.pi, 12) % round(math.pi, 12)
        grouped.setdefault(key, []).append(r.rate)
    if len(grouped) < 2:
        raise InputError("psi_directional needs at least two distinct directions (modulo pi)")

    angles, values = [], []
    for phi, group in grouped.items():
        mean = float(np.mean(group))
        angles.extend([phi, phi + math.pi])
        values.extend([mean, mean])
    order = np.argsort(angles)
    phi = np.asarray(angles)[order]
    val = np.asarray(values)[order]

    # wrap the last interval back to the first angle
    gaps = np.diff(np.append(phi, phi[0] + 2 * math.pi))
    integral = float(np.sum(0.5 * (val + np.roll(val, -1)) * gaps))
    return ShapeMetric(classlabel=rates[0].classlabel, psi=-0.5 * integral,
                       method=METHOD_DIRECTIONAL, rates=tuple(rates))


def circle_auto_transiogram(R: float, h):
    """
    Auto-transiogram of a disk of radius R: lens-overlap area over disk area.

    (2/pi) {arccos(t) - t sqrt(1 - t^2)} with t = h / 2R, and 0 for h >= 2R.

    Raises:
        InputError: R <= 0 or h < 0
    """
    if R <= 0:
        raise InputError(f"radius must be > 0, got {R!r}")
    harr = np.asarray(h, dtype=float)
    if np.any(harr < 0):
        raise InputError(f"distance must be >= 0, got {h!r}")
    t = np.minimum(harr / (2.0 * R), 1.0)
    value = (2.0 / np.pi) * (np.arccos(t) - t * np.sqrt(1.0 - t * t))
    value = np.where(harr >= 2.0 * R, 0.0, value)
    return float(value) if value.ndim == 0 else value


def rasterize_disk(n: int, radius: float, center: Tuple[float, float] = (0.5, 0.5),
                   class_in: int = 1, class_out: int = 2, nclasses: int = 2) -> CategoricalGrid:
    """n x n unit-area map (cellsize 1/n); cells whose centre lies in the disk get class_in."""
    if n < 1 or radius <= 0:
        raise InputError("rasterize_disk needs n >= 1 and radius > 0")
    centres = (np.arange(n) + 0.5) / n
    y, x = np.meshgrid(centres, centres, indexing="ij")
    inside = (x - center[0]) ** 2 + (y - center[1]) ** 2 <= radius ** 2
    labels = np.where(inside, class_in, class_out)
    return CategoricalGrid.from_array(labels, cellsize=1.0 / n, nclasses=nclasses)


def raster_perimeter_area(grid: CategoricalGrid, k: int, include_boundary: bool = False) -> ShapeMetric:
    """
    Perimeter-to-area ratio from 4-neighbour edge counts.

    Edges separating class k from another class count toward the perimeter; edges on the
    map boundary count only with include_boundary. Psi = perimeter * sqrt(A) / area, which
    is perimeter / area after rescaling the map area A to one.

    Raises:
        InputError: class k absent from the grid
    """
    grid.check_class(k)
    inside = grid.labels == k
    ncells = int(inside.sum())
    if ncells == 0:
        raise InputError(f"class {k} is absent from the grid")

    edges = int(np.count_nonzero(inside[:, :-1] != inside[:, 1:]))
    edges += int(np.count_nonzero(inside[:-1, :] != inside[1:, :]))
    if include_boundary:
        edges += int(inside[0, :].sum() + inside[-1, :].sum() + inside[:, 0].sum() + inside[:, -1].sum())

    c = grid.cellsize
    perimeter = edges * c
    area = ncells * c * c
    psi = perimeter * math.sqrt(grid.area) / area
    return ShapeMetric(classlabel=k, psi=psi, method=METHOD_RASTER, perimeter=perimeter, area=area)
