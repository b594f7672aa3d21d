"""
Tests for parametric auto-transiogram models and the transiogram / variogram links.
"""

import json
import math

import numpy as np
import pytest

from src.errors import ConfigError, InputError
from src.models import (
    ModelFamily,
    ParametricModel,
    auto_variogram,
    eval_model,
    load_model_configs,
    model_from_config,
    transiogram_to_covariogram,
    transiogram_to_crossvariogram,
    variogram_to_auto_transiogram,
)

FAMILIES = [f.value for f in ModelFamily]


class TestParametricModel:
    """Construction and validation."""

    @pytest.mark.parametrize("kwargs", [
        {"family": "exponential", "range": 0.0, "proportion": 0.5},
        {"family": "exponential", "range": 1.0, "proportion": 1.0},
        {"family": "exponential", "range": 1.0, "proportion": 0.0},
        {"family": "hole-effect", "range": 1.0, "proportion": 0.5},
        {"family": "spherical", "range": 1.0, "proportion": 0.5, "tail": 1, "head": 2},
    ])
    def test_invalid_models_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ParametricModel(**kwargs)

    def test_family_is_case_insensitive(self):
        model = ParametricModel(family=" Gaussian ", range=2.0, proportion=0.3)
        assert model.family is ModelFamily.GAUSSIAN
        assert model.sill == 0.3
        assert model.auto
        assert model.label == "gaussian(a=2, p=0.3)"

    def test_bounded_families(self):
        assert not ModelFamily.EXPONENTIAL.bounded
        assert not ModelFamily.GAUSSIAN.bounded
        assert ModelFamily.SPHERICAL.bounded


class TestEvalModel:
    """Closed-form evaluation."""

    @pytest.mark.parametrize("family", FAMILIES)
    def test_one_at_origin(self, family):
        assert eval_model(ParametricModel(family=family, range=1.5, proportion=0.2), 0.0) == 1.0

    @pytest.mark.parametrize("family", ["spherical", "circular", "triangular"])
    def test_bounded_families_reach_sill(self, family):
        model = ParametricModel(family=family, range=1.0, proportion=0.4)
        assert eval_model(model, np.array([1.0, 1.5, 10.0])) == pytest.approx([0.4, 0.4, 0.4])

    def test_exponential_value(self):
        model = ParametricModel(family="exponential", range=1.0, proportion=0.5)
        assert eval_model(model, 0.2) == pytest.approx(1 - 0.5 * (1 - math.exp(-0.2)), abs=1e-15)
        assert eval_model(model, 0.2) == pytest.approx(0.909365, abs=1e-6)

    def test_circular_value(self):
        model = ParametricModel(family="circular", range=1.0, proportion=0.5)
        lens = (2 / math.pi) * (math.acos(0.5) - 0.5 * math.sqrt(0.75))
        assert model(0.5) == pytest.approx(1 - 0.5 * (1 - lens), abs=1e-15)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_monotone_bounded_and_continuous(self, family):
        model = ParametricModel(family=family, range=1.0, proportion=0.35)
        h = np.linspace(0.0, 3.0, 601)
        values = eval_model(model, h)
        assert np.all(np.diff(values) <= 1e-15)
        assert np.all((values >= 0.35 - 1e-15) & (values <= 1.0))
        just_below, just_above = eval_model(model, np.array([1.0 - 1e-9, 1.0 + 1e-9]))
        assert abs(just_below - just_above) < 1e-6

    def test_exponential_tends_to_sill(self):
        model = ParametricModel(family="exponential", range=1.0, proportion=0.35)
        assert model(50.0) == pytest.approx(0.35, abs=1e-15)

    def test_negative_distance_rejected(self):
        model = ParametricModel(family="exponential", range=1.0, proportion=0.5)
        with pytest.raises(InputError):
            eval_model(model, -0.1)

    def test_scalar_and_array_return_types(self):
        model = ParametricModel(family="triangular", range=2.0, proportion=0.5)
        assert isinstance(model(1.0), float)
        assert model(np.array([0.0, 1.0])).shape == (2,)


class TestConversions:
    """Covariogram and variogram links."""

    def test_covariogram_examples(self):
        assert transiogram_to_covariogram(0.4, 0.5, 0.3).value == pytest.approx(0.05)
        assert transiogram_to_covariogram(1.0, 0.3, 0.3).value == pytest.approx(0.3 * 0.7)
        assert transiogram_to_covariogram(0.3, 0.6, 0.3).value == pytest.approx(0.0)

    def test_crossvariogram_auto_case(self):
        result = transiogram_to_crossvariogram(0.7, 0.7, 1.0, 0.4)
        assert result.value == pytest.approx(0.12)
        assert result.value == pytest.approx(auto_variogram(0.7, 0.4))

    def test_crossvariogram_is_non_positive_for_cross_pairs(self):
        result = transiogram_to_crossvariogram(0.2, 0.4, 0.0, 0.5, tail=1, head=2)
        assert result.value == pytest.approx(-0.15)

    def test_variogram_to_transiogram(self):
        assert variogram_to_auto_transiogram(0.0, 0.5) == 1.0
        assert variogram_to_auto_transiogram(0.25, 0.5) == pytest.approx(0.5)
        assert variogram_to_auto_transiogram(0.3 * 0.7, 0.3) == pytest.approx(0.3)

    def test_variogram_above_proportion_rejected(self):
        with pytest.raises(InputError):
            variogram_to_auto_transiogram(0.6, 0.5)

    def test_round_trip_is_identity(self):
        p = np.linspace(0.0, 1.0, 21)
        back = variogram_to_auto_transiogram(auto_variogram(p, 0.37), 0.37)
        assert np.allclose(back, p, rtol=0, atol=1e-15)

    def test_probability_inputs_checked(self):
        with pytest.raises(InputError):
            transiogram_to_covariogram(1.2, 0.5, 0.5)


class TestModelConfig:
    """Loading models from JSON / YAML."""

    def test_from_mapping(self):
        model = model_from_config({"family": "spherical", "range": 3, "proportion": 0.25, "name": "sand"})
        assert model.label == "sand"

    def test_invalid_mapping(self):
        with pytest.raises(ConfigError):
            model_from_config({"family": "spherical", "range": -3, "proportion": 0.25})
        with pytest.raises(ConfigError):
            model_from_config(["spherical"])

    def test_json_single_object(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"family": "exponential", "range": 1.0, "proportion": 0.5}))
        assert len(load_model_configs(path)) == 1

    def test_yaml_list(self, verdict_table_path):
        models = load_model_configs(verdict_table_path)
        assert [m.family.value for m in models] == FAMILIES
        assert all(m.proportion == 0.5 for m in models)

    def test_unparseable_file(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("models: [unclosed\n")
        with pytest.raises(ConfigError):
            load_model_configs(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_model_configs(tmp_path / "absent.yaml")
