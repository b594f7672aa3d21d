"""
Parametric auto-transiogram models and the analytical links between transiograms,
indicator covariograms and indicator variograms.
Models are validated on construction so a bad range or proportion never reaches evaluation.
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError, InputError
from .grid import LagVector
from .utils import load_structured

ArrayLike = Union[float, np.ndarray]


class ModelFamily(str, Enum):
    """Auto-transiogram families; the last four are bounded (sill reached at h = a)."""
    EXPONENTIAL = "exponential"
    GAUSSIAN = "gaussian"
    SPHERICAL = "spherical"
    CIRCULAR = "circular"
    TRIANGULAR = "triangular"

    @property
    def bounded(self) -> bool:
        return self in (ModelFamily.SPHERICAL, ModelFamily.CIRCULAR, ModelFamily.TRIANGULAR)


class ParametricModel(BaseModel):
    """Auto-transiogram pi_{k|k}(h) = 1 - (1 - pi_k) f(h / a)."""
    family: ModelFamily
    range: float = Field(..., gt=0, description="Range parameter a")
    proportion: float = Field(..., gt=0, lt=1, description="Class proportion pi_k (the sill)")
    tail: int = Field(1, ge=1)
    head: Optional[int] = Field(None, ge=1)
    name: Optional[str] = None

    model_config = {"frozen": True}

    @field_validator("family", mode="before")
    @classmethod
    def normalize_family(cls, v: Any) -> Any:
        """Accept family names in any case."""
        if isinstance(v, str):
            return v.strip().lower()
        return v

    @model_validator(mode="after")
    def check_auto(self) -> "ParametricModel":
        # Parametric forms exist for auto-transiograms only
        if self.head is not None and self.head != self.tail:
            raise ValueError(
                f"parametric families model auto-transiograms only (tail={self.tail}, head={self.head}); "
                f"fit cross-transiograms with kernel regression"
            )
        return self

    @property
    def auto(self) -> bool:
        return True

    @property
    def sill(self) -> float:
        return self.proportion

    @property
    def label(self) -> str:
        return self.name or f"{self.family.value}(a={self.range:g}, p={self.proportion:g})"

    def __call__(self, h: ArrayLike) -> ArrayLike:
        return eval_model(self, h)


def _unit_variogram(family: ModelFamily, t: np.ndarray) -> np.ndarray:
    """Normalised variogram f(t), t = h / a, rising from 0 to 1."""
    if family is ModelFamily.EXPONENTIAL:
        return 1.0 - np.exp(-t)
    if family is ModelFamily.GAUSSIAN:
        return 1.0 - np.exp(-(t ** 2))

    s = np.minimum(t, 1.0)
    if family is ModelFamily.TRIANGULAR:
        f = s
    elif family is ModelFamily.SPHERICAL:
        f = 1.5 * s - 0.5 * s ** 3
    elif family is ModelFamily.CIRCULAR:
        f = 1.0 - (2.0 / np.pi) * (np.arccos(s) - s * np.sqrt(1.0 - s ** 2))
    else:  # pragma: no cover
        raise InputError(f"unknown family {family!r}")
    return np.where(t >= 1.0, 1.0, f)


def eval_model(model: ParametricModel, h: ArrayLike) -> ArrayLike:
    """
    Evaluate the auto-transiogram at distance(s) h.

    Args:
        model: Parametric model
        h: Non-negative distance or array of distances

    Returns:
        Probability (float for scalar input, array otherwise)

    Raises:
        InputError: if any h < 0
    """
    harr = np.asarray(h, dtype=float)
    if np.any(harr < 0) or np.any(np.isnan(harr)):
        raise InputError(f"distance must be >= 0, got {h!r}")
    value = 1.0 - (1.0 - model.proportion) * _unit_variogram(model.family, harr / model.range)
    if np.ndim(value) == 0:
        return float(value)
    return value


class CovariogramValue(BaseModel):
    value: float
    tail: int = 1
    head: int = 1
    lag: Optional[LagVector] = None

    model_config = {"arbitrary_types_allowed": True, "frozen": True}


class VariogramValue(BaseModel):
    """Indicator (cross-)variogram value. Cross values may be negative."""
    value: float
    tail: int = 1
    head: int = 1
    lag: Optional[LagVector] = None

    model_config = {"arbitrary_types_allowed": True, "frozen": True}


def _check_probability(name: str, p: ArrayLike) -> None:
    arr = np.asarray(p, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1) or np.any(np.isnan(arr)):
        raise InputError(f"{name} must lie in [0, 1], got {p!r}")


def transiogram_to_covariogram(p_cond: float, p_tail: float, p_head: float,
                               tail: int = 1, head: int = 1,
                               lag: Optional[LagVector] = None) -> CovariogramValue:
    """sigma_{kk'}(h) = pi_k [pi_{k'|k}(h) - pi_{k'}]."""
    _check_probability("transiogram value", p_cond)
    _check_probability("tail proportion", p_tail)
    _check_probability("head proportion", p_head)
    return CovariogramValue(value=p_tail * (p_cond - p_head), tail=tail, head=head, lag=lag)


def transiogram_to_crossvariogram(p_forward: float, p_backward: float, p_zero: float, p_tail: float,
                                  tail: int = 1, head: int = 1,
                                  lag: Optional[LagVector] = None) -> VariogramValue:
    """
    gamma_{kk'}(h) = pi_k {pi_{k'|k}(0) - [pi_{k'|k}(h) + pi_{k'|k}(-h)] / 2}.

    For k != k' pi_{k'|k}(0) = 0, so the value is <= 0 (the sign convention of indicator
    cross-variograms); it is returned as computed.
    """
    for name, p in (("pi(h)", p_forward), ("pi(-h)", p_backward), ("pi(0)", p_zero), ("pi_k", p_tail)):
        _check_probability(name, p)
    value = p_tail * (p_zero - 0.5 * (p_forward + p_backward))
    return VariogramValue(value=value, tail=tail, head=head, lag=lag)


def auto_variogram(p_auto: ArrayLike, p_tail: float) -> ArrayLike:
    """gamma_kk(h) = pi_k (1 - pi_{k|k}(h)); vectorised auto case of the cross-variogram link."""
    _check_probability("transiogram value", p_auto)
    _check_probability("tail proportion", p_tail)
    value = p_tail * (1.0 - np.asarray(p_auto, dtype=float))
    return float(value) if np.ndim(value) == 0 else value


def variogram_to_auto_transiogram(gamma: ArrayLike, p_tail: float) -> ArrayLike:
    """
    pi_{k|k}(h) = 1 - gamma_kk(h) / pi_k.

    Raises:
        InputError: gamma outside [0, pi_k] or pi_k not in (0, 1]
    """
    if not 0 < p_tail <= 1:
        raise InputError(f"tail proportion must be in (0, 1], got {p_tail!r}")
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0) or np.any(g > p_tail) or np.any(np.isnan(g)):
        raise InputError(f"indicator variogram {gamma!r} outside [0, {p_tail!r}] gives a non-probability")
    value = 1.0 - g / p_tail
    return float(value) if np.ndim(value) == 0 else value


def model_from_config(config: Dict[str, Any]) -> ParametricModel:
    """Build a model from a mapping with keys family, range, proportion and optional tail/head/name."""
    if not isinstance(config, dict):
        raise ConfigError(f"model config must be a mapping, got {type(config).__name__}")
    try:
        return ParametricModel(**config)
    except ValidationError as e:
        raise ConfigError(f"invalid model config {config!r}: {e.errors()[0]['msg']}") from e


def load_model_configs(path: Union[str, Path]) -> List[ParametricModel]:
    """
    Load one model or a list of models from a JSON or YAML file.
    A mapping with a top-level `models` key is also accepted.
    """
    try:
        data = load_structured(path)
    except FileNotFoundError as e:
        raise ConfigError(f"model config not found: {path}") from e
    except ValueError as e:
        raise ConfigError(f"cannot parse model config {path}: {e}") from e

    if isinstance(data, dict) and "models" in data:
        data = data["models"]
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not data:
        raise ConfigError(f"{path}: expected a model mapping or a non-empty list of models")
    return [model_from_config(entry) for entry in data]
