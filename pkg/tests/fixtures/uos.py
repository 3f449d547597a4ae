import numpy as np
import pytest

from uosdetect.detect import prepare
from uosdetect.geometry import Subspace, UnionModel, rotated_subspace
from uosdetect.noise import NoiseModel, NoiseRegime, random_spd_covariance
from uosdetect.sim import Scenario, reference_union


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def union() -> UnionModel:
    return reference_union()


@pytest.fixture
def single_union() -> UnionModel:
    return UnionModel(subspaces=(Subspace(basis=np.eye(4)[:, :2]),))


@pytest.fixture
def colored_covariance() -> np.ndarray:
    return random_spd_covariance(4, 10.0, np.random.default_rng(3))


@pytest.fixture
def known_prep(union):
    return prepare(
        union, NoiseModel(regime=NoiseRegime.KNOWN, sigma2=1.0, covariance=np.eye(4))
    )


@pytest.fixture
def colored_prep(union, colored_covariance):
    return prepare(
        union,
        NoiseModel(regime=NoiseRegime.KNOWN, sigma2=0.5, covariance=colored_covariance),
    )


@pytest.fixture
def training(rng) -> np.ndarray:
    return rng.standard_normal((4, 50))


@pytest.fixture
def unknown_cov_prep(union, training):
    return prepare(
        union,
        NoiseModel(
            regime=NoiseRegime.UNKNOWN_COVARIANCE, sigma2=1.0, training_samples=training
        ),
    )


@pytest.fixture
def unknown_stats_prep(union, training):
    return prepare(
        union,
        NoiseModel(regime=NoiseRegime.UNKNOWN_STATISTICS, training_samples=training),
    )


@pytest.fixture
def scenario(union) -> Scenario:
    return Scenario(union=union, trials=2000, seed=7)


@pytest.fixture
def wide_union(rng) -> UnionModel:
    """Three 2-dimensional subspaces of R^8 whose direct sum has dimension 6."""
    eye = np.eye(8)
    s1 = Subspace(basis=eye[:, :2])
    return UnionModel(
        subspaces=(
            s1,
            rotated_subspace(s1, (0.5, 0.9), eye[:, 2:4]),
            rotated_subspace(s1, (0.9, 1.2), eye[:, 4:6]),
        )
    )
