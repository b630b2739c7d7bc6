import numpy as np
import pytest

from blasthole.models.cloud import PointCloud
from blasthole.models.config import PipelineConfig
from blasthole.utils.constants import Frame


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cfg():
    return PipelineConfig()


def cone_points(rng, centre=(2.0, 0.0), base=0.9, height=0.5, count=6000, side=None):
    """Points on a solid cone surface z = height * (1 - r / base), optionally one half only"""
    radius = base * np.sqrt(rng.uniform(0.0, 1.0, count))
    if side == "near":
        angle = rng.uniform(np.pi / 2, 3 * np.pi / 2, count)
    else:
        angle = rng.uniform(0.0, 2.0 * np.pi, count)
    x = centre[0] + radius * np.cos(angle)
    y = centre[1] + radius * np.sin(angle)
    return np.column_stack([x, y, height * (1.0 - radius / base)])


def ground_points(rng, low=(0.0, -1.4), high=(5.5, 1.4), count=4000, exclude=None):
    xy = rng.uniform(low, high, (count, 2))
    if exclude is not None:
        centre, radius = exclude
        xy = xy[np.hypot(*(xy - np.asarray(centre)).T) > radius]
    return np.column_stack([xy, np.zeros(len(xy))])


def bench_cloud(rng, centre=(2.0, 0.0), base=0.9, height=0.5, frame=Frame.shadow):
    """A cone on a flat bench, in the Shadow frame"""
    points = np.vstack(
        [cone_points(rng, centre, base, height), ground_points(rng, exclude=(centre, base))]
    )
    return PointCloud(points, frame)
