"""
Validity audit for auto-transiogram models.

Three checks are run against a ParametricModel:

- triangle: pi(h + h') - pi(h) - pi(h') + 1 >= 0 (necessary for any indicator)
- matheron: sum_ij eps_i eps_j (1 - pi(x_i - x_j)) <= 0 for eps in {-1, 0, 1}^m, sum eps = 1
- excursion-psd: the Gaussian correlogram implied by the model (through the indicator
  variogram integral) must give positive semidefinite correlation matrices

Margins are signed so that margin >= -tolerance means pass. Every failing check carries a
witness that reevaluate_witness turns back into the same margin.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, linalg, optimize, special
from scipy.spatial.distance import cdist

from .errors import InputError, InversionInfeasibleError, TransiogramError
from .models import ModelFamily, ParametricModel, auto_variogram, eval_model
from .seeded_rng import SeededRNG
from .settings import Settings

logger = logging.getLogger(__name__)

CHECK_TRIANGLE = "triangle"
CHECK_MATHERON = "matheron"
CHECK_EXCURSION = "excursion-psd"
CHECK_NAMES = (CHECK_TRIANGLE, CHECK_MATHERON, CHECK_EXCURSION)

# h = h' fractions of the range used for the triangle check
TRIANGLE_FRACTIONS = (0.01, 0.05, 0.2)
MAX_EXHAUSTIVE_POINTS = 8


def normal_cdf(x):
    """Standard normal cdf (erf-based)."""
    return special.ndtr(x)


def normal_ppf(p):
    """Inverse standard normal cdf."""
    return special.ndtri(p)


@dataclass(frozen=True)
class PointConfiguration:
    """m planar points with an optional eps vector (entries in {-1, 0, 1}, sum 1)."""
    points: np.ndarray
    epsilon: Optional[Tuple[int, ...]] = None
    kind: str = "random"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InputError(f"points must be an (m, 2) array, got shape {pts.shape}")
        if pts.shape[0] < 2:
            raise InputError("a point configuration needs m >= 2 points")
        object.__setattr__(self, "points", pts)
        if self.epsilon is not None:
            eps = tuple(int(e) for e in self.epsilon)
            _check_epsilon(eps, pts.shape[0])
            object.__setattr__(self, "epsilon", eps)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    def distances(self) -> np.ndarray:
        """Pairwise Euclidean distance matrix."""
        return cdist(self.points, self.points)

    def with_epsilon(self, epsilon: Sequence[int]) -> "PointConfiguration":
        return PointConfiguration(self.points, tuple(epsilon), self.kind)


def _check_epsilon(epsilon: Sequence[int], m: int) -> None:
    if len(epsilon) != m:
        raise InputError(f"epsilon has {len(epsilon)} entries for {m} points")
    if any(e not in (-1, 0, 1) for e in epsilon):
        raise InputError(f"epsilon entries must be -1, 0 or 1: {tuple(epsilon)}")
    if sum(epsilon) != 1:
        raise InputError(f"epsilon must sum to 1, got {sum(epsilon)}")


@dataclass
class ValidityCheck:
    """Outcome of one check. margin >= -tolerance is a pass."""
    name: str
    passed: bool
    margin: float
    witness: Optional[Dict[str, Any]] = None
    evaluated: int = 0
    detail: str = ""

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "verdict": self.verdict,
            "margin": self.margin,
            "witness": self.witness,
            "evaluated": self.evaluated,
            "detail": self.detail,
        }


@dataclass
class ValidityReport:
    """All checks run against one model."""
    model: ParametricModel
    checks: List[ValidityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __bool__(self) -> bool:
        """Allow using the report in boolean context."""
        return self.passed

    def failures(self) -> List[ValidityCheck]:
        return [c for c in self.checks if not c.passed]

    def check(self, name: str) -> Optional[ValidityCheck]:
        for c in self.checks:
            if c.name == name:
                return c
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model.model_dump(mode="json"),
            "label": self.model.label,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


class ValidityFailure(TransiogramError):
    """Raised in strict mode when a model fails at least one check."""

    def __init__(self, report: ValidityReport):
        self.report = report
        names = ", ".join(c.name for c in report.failures())
        super().__init__(f"{report.model.label} failed {len(report.failures())} check(s): {names}")


# ---------------------------------------------------------------------------
# Triangle inequality
# ---------------------------------------------------------------------------

def check_triangle(model: ParametricModel, h: float, h_prime: float, tol: float = 1e-9) -> ValidityCheck:
    """
    margin = pi(h + h') - pi(h) - pi(h') + 1; pass iff margin >= -tol.

    Raises:
        InputError: h or h' negative
    """
    if h < 0 or h_prime < 0:
        raise InputError(f"triangle check needs h, h' >= 0, got {h!r}, {h_prime!r}")
    margin = eval_model(model, h + h_prime) - eval_model(model, h) - eval_model(model, h_prime) + 1.0
    return ValidityCheck(
        name=CHECK_TRIANGLE, passed=margin >= -tol, margin=float(margin),
        witness={"h": float(h), "h_prime": float(h_prime)}, evaluated=1,
    )


def _triangle_check(model: ParametricModel, tol: float) -> ValidityCheck:
    """Worst triangle margin over h = h' in {a/100, a/20, a/5}."""
    checks = [check_triangle(model, f * model.range, f * model.range, tol) for f in TRIANGLE_FRACTIONS]
    worst = min(checks, key=lambda c: c.margin)
    worst.evaluated = len(checks)
    return worst


# ---------------------------------------------------------------------------
# Matheron's indicator condition
# ---------------------------------------------------------------------------

def matheron_form(values: np.ndarray, epsilon: Sequence[int]) -> float:
    """
    sum_ij eps_i eps_j (1 - pi(x_i, x_j)) for an m x m matrix of auto-transiogram values.
    A model passes this witness iff the result is <= tol.

    Raises:
        InputError: eps not in {-1, 0, 1}^m with sum 1, or a non-square value matrix
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise InputError(f"values must be an m x m matrix, got shape {values.shape}")
    _check_epsilon(tuple(int(e) for e in epsilon), values.shape[0])
    eps = np.asarray(epsilon, dtype=float)
    return float(eps @ (1.0 - values) @ eps)


@lru_cache(maxsize=None)
def _exhaustive_epsilons(m: int) -> np.ndarray:
    vectors = np.array(list(itertools.product((-1, 0, 1), repeat=m)), dtype=np.int8)
    return vectors[vectors.sum(axis=1) == 1]


def epsilon_vectors(m: int, rng: Optional[SeededRNG] = None, nsample: int = 5000) -> np.ndarray:
    """
    All eps in {-1, 0, 1}^m with sum 1, in lexicographic order (m <= 8).
    Above 8 points, nsample distinct vectors are drawn from rng instead.
    """
    if m < 2:
        raise InputError(f"epsilon vectors need m >= 2, got {m}")
    if m <= MAX_EXHAUSTIVE_POINTS:
        return _exhaustive_epsilons(m)

    rng = rng or SeededRNG(0)
    drawn = rng.integers(-1, 2, size=(nsample * 4, m)).astype(np.int8)
    drawn = drawn[drawn.sum(axis=1) == 1]
    unique = np.unique(drawn, axis=0)
    return unique[:nsample]


def collinear_configuration(m: int, spacing: float) -> PointConfiguration:
    """m equally spaced points on a line."""
    points = np.column_stack([np.arange(m) * spacing, np.zeros(m)])
    return PointConfiguration(points, kind=f"collinear m={m} s={spacing:g}")


def lattice_configuration(n: int, spacing: float) -> PointConfiguration:
    """n x n square lattice."""
    rows, cols = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    points = np.column_stack([cols.ravel() * spacing, rows.ravel() * spacing])
    return PointConfiguration(points, kind=f"lattice {n}x{n} s={spacing:g}")


def random_configuration(m: int, side: float, rng: SeededRNG) -> PointConfiguration:
    """m points uniform in a side x side square."""
    return PointConfiguration(rng.uniform(0.0, side, size=(m, 2)), kind=f"random m={m}")


def default_configurations(a: float, max_points: int, spacings: Sequence[float],
                           nrandom: int, seed: int,
                           lattice_sizes: Sequence[int] = ()) -> List[PointConfiguration]:
    """
    Search space in a fixed order: collinear lattices (m = 3..max_points for every
    spacing), square lattices with at most max_points**2 points, then nrandom seeded
    random planar sets in a square of side 2a.

    Args:
        a: Model range; spacings are absolute distances
    """
    configs = [collinear_configuration(m, s) for s in spacings for m in range(3, max_points + 1)]
    configs += [lattice_configuration(n, s) for n in lattice_sizes for s in spacings]
    rng = SeededRNG(seed)
    for _ in range(nrandom):
        m = int(rng.integers(2, max_points + 1))
        configs.append(random_configuration(m, 2.0 * a, rng))
    return configs


def _worst_matheron(model: ParametricModel, config: PointConfiguration,
                    seed: int) -> Tuple[float, Tuple[int, ...]]:
    """Largest form over all eps vectors for one configuration, as (margin, eps)."""
    gamma = 1.0 - eval_model(model, config.distances())
    # fresh stream per configuration keeps sampled eps independent of scheduling
    eps = epsilon_vectors(config.m, SeededRNG(seed)).astype(float)
    forms = np.einsum("ni,ij,nj->n", eps, gamma, eps)
    i = int(np.argmax(forms))
    return -float(forms[i]), tuple(int(e) for e in eps[i])


def search_violation(model: ParametricModel, maxpoints: int = 8,
                     spacings: Optional[Sequence[float]] = None, nrandom: int = 1000,
                     seed: int = 0, tol: float = 1e-9, workers: int = 1,
                     configurations: Optional[List[PointConfiguration]] = None) -> ValidityReport:
    """
    Search collinear and random planar configurations for a Matheron violation.

    Reduction is deterministic: the witness is the configuration with the most negative
    margin, ties going to the smaller (configuration index, eps) pair.

    Args:
        model: Auto-transiogram model
        maxpoints: Largest m (>= 2); eps enumeration is exhaustive up to 8
        spacings: Absolute collinear spacings (default: fractions of the range from Settings)
        nrandom: Number of seeded random configurations
        seed: Seed for the random configurations
        tol: Inequality tolerance
        workers: Threads used to evaluate configurations

    Returns:
        ValidityReport holding a single matheron check
    """
    if maxpoints < 2:
        raise InputError(f"maxpoints must be >= 2, got {maxpoints}")
    if spacings is None:
        spacings = [f * model.range for f in Settings().validity_search.collinear_spacings]
    if configurations is None:
        configurations = default_configurations(model.range, maxpoints, spacings, nrandom, seed)

    def evaluate(config):
        return _worst_matheron(model, config, seed)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate, configurations))
    else:
        results = [evaluate(c) for c in configurations]

    best_index, (best_margin, best_eps) = 0, results[0]
    for i, (margin, eps) in enumerate(results[1:], start=1):
        if margin < best_margin:
            best_index, best_margin, best_eps = i, margin, eps

    witness_config = configurations[best_index]
    check = ValidityCheck(
        name=CHECK_MATHERON,
        passed=best_margin >= -tol,
        margin=best_margin,
        witness={
            "configuration": best_index,
            "kind": witness_config.kind,
            "points": witness_config.points.tolist(),
            "epsilon": list(best_eps),
        },
        evaluated=len(configurations),
    )
    logger.info("matheron %s: %s margin=%.3e over %d configurations",
                model.label, check.verdict, best_margin, len(configurations))
    return ValidityReport(model=model, checks=[check])


# ---------------------------------------------------------------------------
# Excursion-set eligibility
# ---------------------------------------------------------------------------

def _integrand(theta: float, z2: float) -> float:
    s = 1.0 + math.sin(theta)
    if s <= 0.0:
        return 0.0
    return math.exp(-z2 / s)


def indicator_variogram_from_correlogram(rho: float, z: float, tol: float = 1e-12) -> float:
    """
    gamma = (1/2pi) int_rho^1 exp(-z^2 / (1 + u)) du / sqrt(1 - u^2)

    Computed with u = sin(theta), which removes the endpoint singularity at u = 1.

    Raises:
        InputError: rho outside [-1, 1]
    """
    if not -1.0 <= rho <= 1.0 or math.isnan(rho):
        raise InputError(f"correlation must lie in [-1, 1], got {rho!r}")
    if rho == 1.0:
        return 0.0
    lower = math.asin(rho)
    if z == 0.0:
        return (0.5 * math.pi - lower) / (2.0 * math.pi)
    value, _ = integrate.quad(_integrand, lower, 0.5 * math.pi, args=(z * z,),
                              epsabs=tol, epsrel=1e-10, limit=200)
    return value / (2.0 * math.pi)


def max_indicator_variogram(z: float, tol: float = 1e-12) -> float:
    """Value at rho = -1, the upper end of the attainable range."""
    return indicator_variogram_from_correlogram(-1.0, z, tol)


def invert_indicator_variogram(gamma: float, z: float, tol: float = 1e-12) -> float:
    """
    Correlation rho whose indicator variogram equals gamma.

    The forward map is strictly decreasing in rho; the root is bracketed in
    theta = arcsin(rho) where its slope is bounded.

    Raises:
        InversionInfeasibleError: gamma outside [0, gamma(rho = -1)]
    """
    upper = max_indicator_variogram(z, tol)
    if math.isnan(gamma) or gamma < 0.0 or gamma > upper + 1e-12:
        raise InversionInfeasibleError(gamma, upper)
    if gamma == 0.0:
        return 1.0
    if gamma >= upper:
        return -1.0
    if z == 0.0:
        return math.cos(2.0 * math.pi * gamma)

    def residual(theta):
        return indicator_variogram_from_correlogram(math.sin(theta), z, tol) - gamma

    theta = optimize.brentq(residual, -0.5 * math.pi, 0.5 * math.pi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    return math.sin(theta)


@lru_cache(maxsize=65536)
def _cached_inverse(gamma: float, z: float) -> float:
    return invert_indicator_variogram(gamma, z)


def _implied_correlation(model: ParametricModel, z: float,
                         distances: np.ndarray) -> Tuple[Optional[np.ndarray], Optional[Tuple[float, float]]]:
    """
    Correlation matrix implied by the model at the given pairwise distances.
    Returns (None, (target, upper)) when some entry cannot be inverted.
    """
    gamma = auto_variogram(eval_model(model, distances), model.proportion)
    rho = np.eye(distances.shape[0])
    iu = np.triu_indices(distances.shape[0], k=1)
    for i, j in zip(*iu):
        try:
            r = _cached_inverse(float(gamma[i, j]), float(z))
        except InversionInfeasibleError as e:
            return None, (e.target, e.upper)
        rho[i, j] = rho[j, i] = r
    return rho, None


def _excursion_margin(model: ParametricModel, z: float, points: np.ndarray) -> Tuple[float, bool]:
    """(margin, feasible): smallest eigenvalue, or upper - target when inversion fails."""
    if points.shape[0] < 2:
        return 1.0, True
    rho, infeasible = _implied_correlation(model, z, cdist(points, points))
    if rho is None:
        target, upper = infeasible
        return float(upper - target), False
    return float(linalg.eigvalsh(rho)[0]), True


def excursion_eligibility(family: Union[ModelFamily, str], a: float, z: float,
                          configurations: Sequence[Union[PointConfiguration, np.ndarray]],
                          tol: float = 1e-8, workers: int = 1) -> ValidityReport:
    """
    Check whether the family can be the auto-transiogram of an excursion set {Y >= z}
    of a stationary unit-variance Gaussian field.

    For every configuration the model transiogram at all pairwise distances is turned
    into an indicator variogram, inverted to a correlation, and the smallest eigenvalue
    of the resulting correlation matrix is compared with -tol * m. A pass only means no
    searched configuration produced a negative eigenvalue.

    Args:
        family: Model family
        a: Range parameter
        z: Threshold; the class proportion is 1 - Phi(z)
        configurations: Point sets (PointConfiguration or (m, 2) arrays; m = 1 trivially passes)
        tol: Eigenvalue tolerance per point
        workers: Threads used to evaluate configurations
    """
    proportion = float(1.0 - normal_cdf(z))
    model = ParametricModel(family=family, range=a, proportion=proportion)
    point_sets = [c.points if isinstance(c, PointConfiguration) else np.atleast_2d(np.asarray(c, dtype=float))
                  for c in configurations]
    kinds = [c.kind if isinstance(c, PointConfiguration) else "explicit" for c in configurations]

    def evaluate(points):
        return _excursion_margin(model, z, points)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate, point_sets))
    else:
        results = [evaluate(p) for p in point_sets]

    best, best_index, failed = None, None, False
    for i, ((margin, feasible), points) in enumerate(zip(results, point_sets)):
        violated = (not feasible) or margin < -tol * points.shape[0]
        # a violation always outranks a pass; among equals the smaller margin wins
        key = (not violated, margin)
        if best is None or key < best:
            best, best_index, failed = key, i, violated

    if best_index is None:
        check = ValidityCheck(name=CHECK_EXCURSION, passed=True, margin=1.0, evaluated=0)
    else:
        margin, feasible = results[best_index]
        check = ValidityCheck(
            name=CHECK_EXCURSION,
            passed=not failed,
            margin=margin,
            witness={
                "configuration": best_index,
                "kind": kinds[best_index],
                "points": point_sets[best_index].tolist(),
                "z": float(z),
            },
            evaluated=len(point_sets),
            detail="" if feasible else "inversion infeasible",
        )
    logger.info("excursion-psd %s: %s margin=%.3e over %d configurations",
                model.label, check.verdict, check.margin, check.evaluated)
    return ValidityReport(model=model, checks=[check])


# ---------------------------------------------------------------------------
# Witness replay and full audit
# ---------------------------------------------------------------------------

def reevaluate_witness(model: ParametricModel, check: ValidityCheck) -> float:
    """Recompute the margin of a check from its witness alone."""
    w = check.witness
    if w is None:
        raise InputError(f"check {check.name} carries no witness")
    if check.name == CHECK_TRIANGLE:
        return check_triangle(model, w["h"], w["h_prime"]).margin
    if check.name == CHECK_MATHERON:
        points = np.asarray(w["points"], dtype=float)
        return -matheron_form(eval_model(model, cdist(points, points)), w["epsilon"])
    if check.name == CHECK_EXCURSION:
        z = w["z"]
        excursion_model = ParametricModel(family=model.family, range=model.range,
                                          proportion=float(1.0 - normal_cdf(z)))
        margin, _ = _excursion_margin(excursion_model, z, np.asarray(w["points"], dtype=float))
        return margin
    raise InputError(f"unknown check {check.name!r}")


def validate_model(model: ParametricModel, settings: Optional[Settings] = None,
                   seed: Optional[int] = None, workers: int = 1,
                   on_check: Optional[Callable[[ValidityCheck], None]] = None) -> ValidityReport:
    """
    Run the triangle, Matheron and excursion-set checks on one model.

    The excursion threshold is z = Phi^-1(1 - pi_k). `on_check` is called after each
    check finishes.
    """
    notify = on_check or (lambda check: None)
    settings = settings or Settings()
    search = settings.validity_search
    tolerances = settings.tolerances
    seed = search.seed if seed is None else seed
    spacings = [f * model.range for f in search.collinear_spacings]

    triangle = _triangle_check(model, tolerances.inequality)
    notify(triangle)

    matheron = search_violation(
        model, maxpoints=search.max_points, spacings=spacings,
        nrandom=search.random_configurations, seed=seed,
        tol=tolerances.inequality, workers=workers,
    ).checks[0]
    notify(matheron)

    z = float(normal_ppf(1.0 - model.proportion))
    configurations = default_configurations(
        model.range, search.excursion_max_points, spacings,
        search.excursion_random_configurations, seed + 1, lattice_sizes=search.lattice_sizes,
    )
    excursion = excursion_eligibility(
        model.family, model.range, z, configurations,
        tol=tolerances.eigenvalue, workers=workers,
    ).checks[0]
    notify(excursion)

    report = ValidityReport(model=model, checks=[triangle, matheron, excursion])
    logger.info("%s: %s", model.label, "pass" if report else "fail")
    return report
