import numpy as np
import pytest

from eitdsm import pipeline
from eitdsm.grid import CartesianGrid, Circle, ConductivitySample


@pytest.fixture(scope="session")
def small_grid():
    return CartesianGrid(17, 17)


@pytest.fixture(scope="session")
def one_circle():
    return ConductivitySample(shapes=(Circle((0.3, 0.2), 0.3),))


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Scenario-1 dataset, 3 records, N=2, 16x16 nodes (maxpool-compatible)."""
    path = str(tmp_path_factory.mktemp("data") / "tiny.eitd")
    pipeline.generate_dataset(
        scenario=1, samples=3, n_pairs=2, grid=CartesianGrid(16, 16),
        master_seed=4242, out_path=path)
    return path


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(987654321)
