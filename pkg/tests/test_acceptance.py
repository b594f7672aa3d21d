"""
End-to-end properties of the whole toolkit: circle and disk shape metrics, the model
verdict table, excursion-set agreement, regression stochasticity and the scan oracle.
"""

import math

import numpy as np
import pytest

from src.empirical import EmpiricalTransiogram, directional_curve, scan_lag
from src.fitting import (
    KernelFamily,
    NonparametricModel,
    bracket_regress,
    linear_interpolate,
    make_kernel,
    regress_matrix,
)
from src.grfsim import (
    METHOD_CIRCULANT,
    CorrelogramSpec,
    ThresholdSet,
    simulate_grf,
    theoretical_auto_transiogram,
    truncate,
    truncate_to_proportions,
)
from src.grid import LagVector, proportions
from src.models import ParametricModel
from src.settings import Settings
from src.shape import (
    circle_auto_transiogram,
    psi_directional,
    psi_isotropic,
    rasterize_disk,
    rate_from_samples,
    transition_rate,
)
from src.validity import (
    CHECK_EXCURSION,
    CHECK_TRIANGLE,
    indicator_variogram_from_correlogram,
    invert_indicator_variogram,
    validate_model,
)

AXES_AND_DIAGONALS = [(0, 1), (1, 0), (1, 1), (1, -1)]


class TestCircle:
    """Analytic disk of radius 0.25 on a unit-area map."""

    def test_rate_converges_to_circle_perimeter(self):
        lags = 0.02 / 2 ** np.arange(5)
        assert lags[-1] == pytest.approx(0.00125)
        rates = [rate_from_samples([h], [circle_auto_transiogram(0.25, h)]) for h in lags]
        finest = rates[-1]
        assert finest.rate == pytest.approx(-8 / math.pi, rel=0.01)
        assert psi_isotropic(finest).psi == pytest.approx(8.0, rel=0.01)

    @pytest.mark.slow
    def test_rasterized_disks_keep_their_order(self, disk_512):
        def psi(grid):
            rates = [transition_rate(directional_curve(grid, step, 1), 1) for step in AXES_AND_DIAGONALS]
            return psi_directional(rates).psi

        large = psi(disk_512)
        small = psi(rasterize_disk(512, 0.125))
        assert large == pytest.approx(8.0, rel=0.10)
        assert small == pytest.approx(16.0, rel=0.10)
        assert small > large


@pytest.mark.slow
class TestVerdictTable:
    """Full default search over the five families at a = 1, proportion 0.5."""

    @pytest.fixture(scope="class")
    def reports(self):
        settings = Settings()
        families = ["exponential", "gaussian", "spherical", "circular", "triangular"]
        return {f: validate_model(ParametricModel(family=f, range=1.0, proportion=0.5), settings, seed=0)
                for f in families}

    def test_exponential_passes_everything(self, reports):
        assert reports["exponential"].passed

    def test_gaussian_fails_triangle(self, reports):
        triangle = reports["gaussian"].check(CHECK_TRIANGLE)
        assert not triangle
        assert triangle.witness["h"] == pytest.approx(0.2)
        assert triangle.witness["h_prime"] == pytest.approx(0.2)
        assert triangle.margin <= -1e-3

    @pytest.mark.parametrize("family", ["spherical", "circular", "triangular"])
    def test_bounded_families_fail_excursion(self, reports, family):
        check = reports[family].check(CHECK_EXCURSION)
        assert not reports[family]
        assert not check
        assert check.margin < -1e-6
        assert check.witness["z"] == pytest.approx(0.0, abs=1e-12)


class TestIndicatorQuadrature:
    """Median-split indicator variogram."""

    def test_known_values_and_inverse(self):
        assert indicator_variogram_from_correlogram(0.0, 0.0) == pytest.approx(0.25, abs=1e-8)
        assert indicator_variogram_from_correlogram(1.0, 0.0) == 0.0
        for rho in np.linspace(-0.95, 0.95, 50):
            gamma = indicator_variogram_from_correlogram(float(rho), 0.0)
            assert invert_indicator_variogram(gamma, 0.0) == pytest.approx(rho, abs=1e-7)


@pytest.mark.slow
class TestExcursionAgreement:
    """Simulated excursion sets against their theoretical auto-transiogram."""

    def test_exponential_median_split(self):
        spec = CorrelogramSpec(family="exponential", range=10.0)
        thresholds = ThresholdSet(cutoffs=[0.0])
        lags = np.arange(1, 21, dtype=float)
        curves = []
        for seed in range(10):
            field = simulate_grf(256, 256, 1.0, spec, seed=seed, method=METHOD_CIRCULANT)
            grid = truncate(field, thresholds)
            for step in [(0, 1), (1, 0)]:
                curves.append(directional_curve(grid, step, 20).curve(2, 2))
        empirical = np.mean(curves, axis=0)
        theoretical = theoretical_auto_transiogram(spec, 0.0, lags)
        assert np.mean(np.abs(empirical - theoretical)) <= 0.02


class TestRegressionIsStochastic:
    """Kernel-regressed transiogram matrices on randomized sample sets."""

    def test_randomized_sample_sets(self):
        rng = np.random.default_rng(606)
        for trial in range(100):
            K = int(rng.choice([2, 3, 5]))
            N = int(rng.integers(5, 51))
            raw = rng.uniform(0.0, 1.0, size=(K, K, N))
            values = raw / raw.sum(axis=1, keepdims=True)
            distances = np.sort(rng.uniform(0.1, 20.0, size=N))
            samples = EmpiricalTransiogram.from_values(values, distances)
            gap = float(np.max(np.diff(distances)))
            hstar = rng.uniform(distances[0], distances[-1], size=5)

            for family in KernelFamily:
                for r in (1.01 * gap, 2.0 * gap, 5.0 * gap):
                    model = NonparametricModel(samples=samples, kernel=make_kernel(family.value, r))
                    assert np.array_equal(regress_matrix(model, 0.0), np.eye(K))
                    for h in hstar:
                        matrix = regress_matrix(model, float(h), strict=True)
                        assert np.allclose(matrix.sum(axis=1), 1.0, rtol=0, atol=1e-12)
                        assert np.all((matrix >= 0.0) & (matrix <= 1.0 + 1e-15))

    def test_bracketing_triangular_equals_linear_interpolation(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            N = int(rng.integers(2, 30))
            auto = rng.uniform(0.0, 1.0, size=N)
            values = np.array([[auto, 1.0 - auto], [1.0 - auto, auto]])
            distances = np.sort(rng.choice(np.arange(1, 200), size=N, replace=False)) * 0.05
            model = NonparametricModel(samples=EmpiricalTransiogram.from_values(values, distances),
                                       kernel=make_kernel("triangular", 1.0))
            for h in rng.uniform(distances[0], distances[-1], size=50):
                expected = linear_interpolate(distances, auto, float(h))
                assert bracket_regress(model, 1, 1, float(h)) == pytest.approx(expected, abs=1e-12)


class TestScanOracle:
    """Exhaustive scan against a double loop over every cell."""

    def test_all_random_grids(self, random_grids):
        for grid in random_grids:
            for drow in range(-3, 4):
                for dcol in range(-3, 4):
                    expected = np.zeros((grid.nclasses, grid.nclasses), dtype=np.int64)
                    for r in range(grid.nrows):
                        for c in range(grid.ncols):
                            rr, cc = r + drow, c + dcol
                            if 0 <= rr < grid.nrows and 0 <= cc < grid.ncols:
                                expected[grid.labels[r, c] - 1, grid.labels[rr, cc] - 1] += 1
                    assert np.array_equal(scan_lag(grid, LagVector(drow, dcol)).counts, expected)


class TestFragmentation:
    """Equal proportions, different patch sizes."""

    def test_fragmented_map_transitions_faster(self):
        for seed in range(10):
            rates = []
            for a in (1.5, 12.0):
                field = simulate_grf(64, 64, 1.0, CorrelogramSpec(family="exponential", range=a),
                                     seed=seed, method=METHOD_CIRCULANT)
                grid = truncate_to_proportions(field, [0.6, 0.4])
                assert proportions(grid)[1] == pytest.approx(0.40, abs=0.01)
                rates.append(transition_rate(directional_curve(grid, (0, 1), 1), 2).rate)
            fragmented, coherent = rates
            assert abs(fragmented) > abs(coherent)
