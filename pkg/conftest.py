"""
Shared fixtures. Living at the repository root puts it on sys.path, so tests import
the package as `src`.
"""

import os

import numpy as np
import pytest

from src.grid import CategoricalGrid
from src.shape import rasterize_disk

ROOT = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(ROOT, "data", "fixtures")
MODELS = os.path.join(ROOT, "data", "models")


@pytest.fixture
def two_by_two():
    """[[1, 2], [1, 1]] with unit cells."""
    return CategoricalGrid.from_array([[1, 2], [1, 1]], cellsize=1.0, nclasses=2)


@pytest.fixture
def two_by_two_path():
    return os.path.join(FIXTURES, "two_by_two.grid")


@pytest.fixture
def verdict_table_path():
    return os.path.join(MODELS, "verdict_table.yaml")


@pytest.fixture
def checkerboard():
    """8 x 8 alternating classes 1/2."""
    i, j = np.indices((8, 8))
    return CategoricalGrid.from_array(1 + (i + j) % 2, nclasses=2)


@pytest.fixture
def random_grids():
    """100 random grids up to 8 x 8 with 2..4 classes (fixed seed)."""
    rng = np.random.default_rng(2024)
    grids = []
    for _ in range(100):
        nrows, ncols = rng.integers(1, 9, size=2)
        K = int(rng.integers(2, 5))
        grids.append(CategoricalGrid.from_array(rng.integers(1, K + 1, size=(nrows, ncols)), nclasses=K))
    return grids


@pytest.fixture(scope="session")
def disk_512():
    """Disk of radius 0.25 centred on a 512 x 512 unit-area map."""
    return rasterize_disk(512, 0.25)


@pytest.fixture
def isolated_config(tmp_path, monkeypatch):
    """Run from an empty directory so config.json/.env of the checkout are not picked up."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("TRANSIOGRAM_CONFIG", raising=False)
    monkeypatch.delenv("TRANSIOGRAM_THREADS", raising=False)
    monkeypatch.delenv("TRANSIOGRAM_LOG_LEVEL", raising=False)
    return tmp_path
