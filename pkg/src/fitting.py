"""
Non-parametric transiogram models: linear interpolation between empirical samples and
Nadaraya-Watson kernel regression over the lag axis.

A kernel-regressed model keeps the properties of its samples: outputs are non-negative,
every tail row sums to one, and the identity matrix is returned at h = 0.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, field_validator
from scipy import stats

from .empirical import CURVE_COLUMNS, EmpiricalTransiogram, curve_to_frame
from .errors import ConfigError, InputError, NotEvaluableError

logger = logging.getLogger(__name__)

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class KernelFamily(str, Enum):
    EPANECHNIKOV = "epanechnikov"
    GAUSSIAN = "gaussian"
    BIWEIGHT = "biweight"
    TRIANGULAR = "triangular"

    @property
    def compact(self) -> bool:
        """Support limited to |t| <= 1."""
        return self is not KernelFamily.GAUSSIAN


class KernelSpec(BaseModel):
    """Kernel family and bandwidth r (map units); t = dh / r."""
    family: KernelFamily = KernelFamily.GAUSSIAN
    bandwidth: float = Field(..., gt=0)

    model_config = {"frozen": True}

    @field_validator("family", mode="before")
    @classmethod
    def normalize_family(cls, v):
        if isinstance(v, str):
            return v.strip().lower()
        return v


def make_kernel(family: str, bandwidth: float) -> KernelSpec:
    """KernelSpec from CLI-style arguments; validation errors become ConfigError."""
    try:
        return KernelSpec(family=family, bandwidth=bandwidth)
    except ValidationError as e:
        raise ConfigError(f"invalid kernel ({family}, r={bandwidth}): {e.errors()[0]['msg']}") from e


def _kernel_t(family: KernelFamily, t: np.ndarray) -> np.ndarray:
    a = np.abs(t)
    inside = a <= 1.0
    if family is KernelFamily.EPANECHNIKOV:
        return np.where(inside, 0.75 * (1.0 - t * t), 0.0)
    if family is KernelFamily.GAUSSIAN:
        # exp{-t^2}, without the conventional 1/2
        return INV_SQRT_2PI * np.exp(-t * t)
    if family is KernelFamily.BIWEIGHT:
        return np.where(inside, (15.0 / 16.0) * (1.0 - t * t) ** 2, 0.0)
    if family is KernelFamily.TRIANGULAR:
        return np.where(inside, 1.0 - a, 0.0)
    raise InputError(f"unknown kernel {family!r}")  # pragma: no cover


def kernel_eval(spec: KernelSpec, dh):
    """kappa(dh / r) for a scalar or array of lag differences."""
    value = _kernel_t(spec.family, np.asarray(dh, dtype=float) / spec.bandwidth)
    return float(value) if np.ndim(value) == 0 else value


def _weights(spec: KernelSpec, dh: np.ndarray) -> np.ndarray:
    """
    Kernel weights up to a common factor.

    Gaussian weights are shifted by the smallest exponent so that lags far from every
    sample still get a non-zero (and correctly proportioned) weight.
    """
    t = np.asarray(dh, dtype=float) / spec.bandwidth
    if spec.family is KernelFamily.GAUSSIAN:
        t2 = t * t
        return np.exp(-(t2 - t2.min())) if t2.size else t2
    return _kernel_t(spec.family, t)


def linear_interpolate(distances: Sequence[float], values: Sequence[float], h: float) -> float:
    """
    p(h*) = [(h_{n+1} - h*) p(h_n) + (h* - h_n) p(h_{n+1})] / (h_{n+1} - h_n)

    Raises:
        InputError: h* outside [h_1, h_N] (the linear method does not extrapolate),
            or distances not strictly increasing
    """
    d = np.asarray(distances, dtype=float)
    p = np.asarray(values, dtype=float)
    if d.size == 0 or d.size != p.size:
        raise InputError("linear_interpolate needs matching, non-empty distance and value lists")
    if np.any(np.diff(d) <= 0):
        raise InputError("sample distances must be strictly increasing")
    if h < d[0] or h > d[-1]:
        raise InputError(f"h* = {h!r} outside the sampled range [{d[0]!r}, {d[-1]!r}]")

    n = int(np.searchsorted(d, h, side="right")) - 1
    if d[n] == h:
        return float(p[n])
    lo, hi = d[n], d[n + 1]
    return float(((hi - h) * p[n] + (h - lo) * p[n + 1]) / (hi - lo))


@dataclass(frozen=True)
class NonparametricModel:
    """
    Kernel-regression model over an empirical transiogram (one direction or one
    omnidirectional curve). Samples are shared by all K x K curves.
    """
    samples: EmpiricalTransiogram
    kernel: KernelSpec
    weight_by_pairs: bool = False

    @property
    def nclasses(self) -> int:
        return self.samples.nclasses

    def usable(self, k: int) -> np.ndarray:
        """Lags whose tail-k row is defined; the same exclusion applies to every head."""
        rows = self.samples.values[k - 1]
        return (self.samples.npairs[k - 1] > 0) & np.isfinite(rows).all(axis=0)

    def row(self, k: int, h: float) -> np.ndarray:
        """Regressed tail-k row (all heads) at h*."""
        K = self.nclasses
        if not 1 <= k <= K:
            raise InputError(f"class {k} not in 1..{K}")
        if h < 0 or math.isnan(h):
            raise InputError(f"h* must be >= 0, got {h!r}")
        if h == 0:
            out = np.zeros(K)
            out[k - 1] = 1.0
            return out

        mask = self.usable(k)
        dist = self.samples.distances[mask]
        vals = self.samples.values[k - 1][:, mask]
        w = _weights(self.kernel, np.abs(dist - h))
        if self.weight_by_pairs:
            w = w * self.samples.npairs[k - 1][mask]
        total = w.sum()
        if not total > 0:
            raise NotEvaluableError(
                f"no sample of tail {k} has non-zero {self.kernel.family.value} weight at h* = {h!r} "
                f"(r = {self.kernel.bandwidth!r})"
            )
        return vals @ w / total

    def __call__(self, h: float) -> np.ndarray:
        return regress_matrix(self, h)


def kernel_regress(model: NonparametricModel, k: int, kp: int, h: float) -> float:
    """
    Nadaraya-Watson estimate of pi_{k'|k}(h*).

    Returns 1 (k = k') or 0 (k != k') at h* = 0.

    Raises:
        NotEvaluableError: every usable sample has zero kernel weight at h*
    """
    if not 1 <= kp <= model.nclasses:
        raise InputError(f"class {kp} not in 1..{model.nclasses}")
    return float(model.row(k, h)[kp - 1])


def regress_matrix(model: NonparametricModel, h: float, strict: bool = False) -> np.ndarray:
    """
    K x K matrix of regressed transiograms at h*.

    Tails that cannot be evaluated come back as NaN rows (or raise with strict=True).
    """
    K = model.nclasses
    out = np.full((K, K), np.nan)
    for k in range(1, K + 1):
        try:
            out[k - 1] = model.row(k, h)
        except NotEvaluableError:
            if strict:
                raise
            logger.debug("tail %d not evaluable at h*=%g", k, h)
    return out


def bracket_regress(model: NonparametricModel, k: int, kp: int, h: float) -> float:
    """
    Triangular kernel on the two usable samples that bracket h*, with bandwidth equal to
    their gap. This is the linear-interpolation special case of kernel regression.

    Raises:
        InputError: h* outside the range of usable samples
    """
    mask = model.usable(k)
    dist = model.samples.distances[mask]
    vals = model.samples.values[k - 1, kp - 1][mask]
    if dist.size == 0 or h < dist[0] or h > dist[-1]:
        raise InputError(f"h* = {h!r} outside the sampled range of tail {k}")
    if dist.size == 1:
        return float(vals[0])

    n = min(int(np.searchsorted(dist, h, side="right")) - 1, dist.size - 2)
    pair = dist[n:n + 2]
    spec = KernelSpec(family=KernelFamily.TRIANGULAR, bandwidth=float(pair[1] - pair[0]))
    w = kernel_eval(spec, np.abs(pair - h))
    return float(np.dot(w, vals[n:n + 2]) / w.sum())


class BandwidthSelector(str, Enum):
    LSCV = "lscv"
    LIKELIHOOD = "likelihood"
    RULE_OF_THUMB = "rule-of-thumb"


# Two probability rows differ by at most 2 in squared distance.
MAX_ROW_SQUARED_ERROR = 2.0
LOG_FLOOR = 1e-12

# Bandwidth of each family equivalent to a unit standard-normal bandwidth, from the
# canonical kernel constants (R(K) / mu2(K)^2)^(1/5). exp{-t^2} is a normal in t*sqrt(2).
_NORMAL_CANONICAL = (1.0 / (2.0 * math.sqrt(math.pi))) ** 0.2
CANONICAL_SCALE = {
    KernelFamily.GAUSSIAN: math.sqrt(2.0),
    KernelFamily.EPANECHNIKOV: 15.0 ** 0.2 / _NORMAL_CANONICAL,
    KernelFamily.BIWEIGHT: 35.0 ** 0.2 / _NORMAL_CANONICAL,
    KernelFamily.TRIANGULAR: 24.0 ** 0.2 / _NORMAL_CANONICAL,
}


def _leave_one_out(samples: EmpiricalTransiogram, spec: KernelSpec):
    """
    Per tail with defined samples: observed rows (n, K), their npairs (n,) and the
    leave-one-out predictions (n, K). A left-out lag that no other sample reaches gets
    a NaN prediction.
    """
    for k in range(samples.nclasses):
        rows = samples.values[k]
        mask = (samples.npairs[k] > 0) & np.isfinite(rows).all(axis=0)
        if not mask.any():
            continue
        d = samples.distances[mask]
        p = rows[:, mask].T
        n = samples.npairs[k][mask].astype(float)
        pred = np.full_like(p, np.nan)
        if d.size > 1:
            t = np.abs(d[:, None] - d[None, :]) / spec.bandwidth
            if spec.family is KernelFamily.GAUSSIAN:
                t2 = t * t
                np.fill_diagonal(t2, np.inf)
                W = np.exp(-(t2 - t2.min(axis=1, keepdims=True)))
            else:
                W = _kernel_t(spec.family, t)
                np.fill_diagonal(W, 0.0)
            sums = W.sum(axis=1)
            ok = sums > 0
            pred[ok] = (W[ok] @ p) / sums[ok, None]
        yield p, n, pred


def _lscv_score(samples: EmpiricalTransiogram, spec: KernelSpec) -> float:
    """
    npairs-weighted leave-one-out squared error over every defined term. A term the
    other samples cannot reach counts as the largest possible row error.
    """
    total, weight = 0.0, 0.0
    for p, n, pred in _leave_one_out(samples, spec):
        err = ((p - pred) ** 2).sum(axis=1)
        err = np.where(np.isfinite(err), err, MAX_ROW_SQUARED_ERROR)
        total += float(np.dot(n, err))
        weight += float(n.sum())
    return total / weight if weight > 0 else math.inf


def _likelihood_score(samples: EmpiricalTransiogram, spec: KernelSpec) -> float:
    """
    Negative leave-one-out log-likelihood per pair: each left-out tail row is scored as a
    multinomial draw from its prediction, with probabilities floored at LOG_FLOOR.
    Unreachable terms score log(LOG_FLOOR).
    """
    total, weight = 0.0, 0.0
    for p, n, pred in _leave_one_out(samples, spec):
        loglik = (p * np.log(np.clip(pred, LOG_FLOOR, None))).sum(axis=1)
        loglik = np.where(np.isfinite(loglik), loglik, math.log(LOG_FLOOR))
        total -= float(np.dot(n, loglik))
        weight += float(n.sum())
    return total / weight if weight > 0 else math.inf


def _defined_distances(samples: EmpiricalTransiogram, method: str) -> np.ndarray:
    defined = (samples.npairs > 0).any(axis=0)
    if int(defined.sum()) < 3:
        raise InputError(f"{method} needs at least 3 lags with defined samples, got {int(defined.sum())}")
    return np.sort(samples.distances[defined])


def _select_by_score(samples: EmpiricalTransiogram, family, candidates: Sequence[float],
                     workers: int, score, method: str) -> float:
    if len(candidates) == 0:
        raise InputError("bandwidth candidate grid is empty")
    if any(r <= 0 for r in candidates):
        raise InputError("bandwidth candidates must be > 0")
    _defined_distances(samples, method)

    grid = sorted(float(r) for r in candidates)
    specs = [make_kernel(family, r) for r in grid]
    if workers > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(lambda s: score(samples, s), specs))
    else:
        scores = [score(samples, s) for s in specs]

    best_r, best_score = grid[0], scores[0]
    for r, value in zip(grid[1:], scores[1:]):
        if value < best_score - 1e-12:
            best_r, best_score = r, value
    logger.info("%s selected r=%g (score %.6g) from %d candidates", method, best_r, best_score, len(grid))
    return best_r


def select_bandwidth_lscv(samples: EmpiricalTransiogram, family, candidates: Sequence[float],
                          workers: int = 1) -> float:
    """
    Least-squares cross-validated bandwidth.

    Args:
        samples: Empirical transiogram with >= 3 defined lags
        family: Kernel family name or KernelFamily
        candidates: Candidate bandwidths (> 0)
        workers: Threads evaluating candidates; the argmin does not depend on it

    Returns:
        The candidate with the smallest score; scores within 1e-12 go to the smaller r
    """
    return _select_by_score(samples, family, candidates, workers, _lscv_score, "LSCV")


def select_bandwidth_likelihood_cv(samples: EmpiricalTransiogram, family, candidates: Sequence[float],
                                   workers: int = 1) -> float:
    """Likelihood cross-validated bandwidth; same arguments and tie rule as select_bandwidth_lscv."""
    return _select_by_score(samples, family, candidates, workers, _likelihood_score, "likelihood CV")


def select_bandwidth_rule_of_thumb(samples: EmpiricalTransiogram, family) -> float:
    """
    Normal-reference bandwidth over the defined lag distances (Silverman factor),
    rescaled to the kernel family.

    Compact kernels are widened to the largest gap between defined lags so that every
    lag inside the sampled range keeps a non-zero weight.
    """
    family = make_kernel(family, 1.0).family
    d = _defined_distances(samples, "rule of thumb")
    kde = stats.gaussian_kde(d, bw_method="silverman")
    r = float(np.sqrt(kde.covariance[0, 0])) * CANONICAL_SCALE[family]
    if family.compact:
        gap = float(np.max(np.diff(d)))
        if r < gap:
            logger.info("rule-of-thumb r=%g widened to the largest lag gap %g", r, gap)
            r = gap
    logger.info("rule of thumb selected r=%g for the %s kernel over %d lags", r, family.value, d.size)
    return r


def select_bandwidth(samples: EmpiricalTransiogram, family, selector, candidates: Optional[Sequence[float]] = None,
                     workers: int = 1) -> float:
    """Dispatch to a selector; the cross-validated ones need a candidate grid."""
    selector = BandwidthSelector(selector)
    if selector is BandwidthSelector.RULE_OF_THUMB:
        return select_bandwidth_rule_of_thumb(samples, family)
    if candidates is None:
        raise InputError(f"{selector.value} needs candidate bandwidths")
    if selector is BandwidthSelector.LSCV:
        return select_bandwidth_lscv(samples, family, candidates, workers)
    return select_bandwidth_likelihood_cv(samples, family, candidates, workers)


def default_bandwidth_grid(samples: EmpiricalTransiogram, size: int = 25) -> List[float]:
    """Geometric grid from the smallest lag spacing to the largest lag."""
    d = np.unique(samples.distances[np.isfinite(samples.distances)])
    if d.size < 2:
        raise InputError("need at least two lags to build a bandwidth grid")
    lo = float(np.min(np.diff(d)))
    hi = float(d[-1])
    if size == 1 or hi <= lo:
        return [lo]
    return list(np.geomspace(lo, hi, size))


def nugget_estimate(model: NonparametricModel, k: int, kp: int) -> float:
    """
    Jump at the origin: |pi_hat(h_eps) - pi(0)| with h_eps = (smallest usable lag) / 1000.

    Raises:
        NotEvaluableError: the model cannot be evaluated next to the origin
    """
    mask = model.usable(k)
    if not mask.any():
        raise NotEvaluableError(f"tail {k} has no defined samples")
    h_eps = float(model.samples.distances[mask].min()) / 1000.0
    origin = 1.0 if k == kp else 0.0
    return abs(kernel_regress(model, k, kp, h_eps) - origin)


def fit_table(model: NonparametricModel, hgrid: Sequence[float]) -> pd.DataFrame:
    """
    Empirical knots (fitted = 0) followed by regressed values on hgrid (fitted = 1), in
    the curve CSV schema. Non-evaluable points are left empty.
    """
    knots = curve_to_frame(model.samples)
    knots["fitted"] = 0

    rows = []
    K = model.nclasses
    for h in hgrid:
        matrix = regress_matrix(model, float(h))
        for k in range(1, K + 1):
            for kp in range(1, K + 1):
                rows.append({
                    "tail": k, "head": kp, "drow": pd.NA, "dcol": pd.NA,
                    "distance": float(h), "value": float(matrix[k - 1, kp - 1]),
                    "npairs": pd.NA, "fitted": 1,
                })
    fitted = pd.DataFrame(rows, columns=CURVE_COLUMNS + ["fitted"])
    table = pd.concat([knots, fitted], ignore_index=True)
    return table.astype({"drow": "Int64", "dcol": "Int64", "npairs": "Int64"})
