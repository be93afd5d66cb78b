import numpy as np
import pytest

from pimlap import DensitySpec, ManifoldModel, assemble, sample, wendland41


@pytest.fixture(scope="session")
def interval():
    return ManifoldModel.interval(0.0, 1.0)


@pytest.fixture(scope="session")
def circle():
    return ManifoldModel.circle(1.0)


@pytest.fixture(scope="session")
def sphere():
    return ManifoldModel.sphere(1.0)


@pytest.fixture(scope="session")
def uniform():
    return DensitySpec("uniform")


@pytest.fixture(scope="session")
def small_interval_system(interval, uniform):
    """Connected interval system small enough for dense oracles."""
    cloud = sample(interval, uniform, 400, seed=11)
    return assemble(cloud, wendland41(), 0.02)


def two_point_system(dist=10.0, t=0.01):
    from pimlap import PointCloud

    man = ManifoldModel.interval(0.0, dist)
    pts = np.array([[0.0], [dist]])
    cloud = PointCloud(
        points=pts,
        density_at_points=np.full(2, 1.0 / dist),
        manifold=man,
        seed=0,
    )
    return assemble(cloud, wendland41(), t)
