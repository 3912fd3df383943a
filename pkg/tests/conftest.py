import numpy as np
import pytest

from adaptive_lle import MetricState


def random_psd_state(rng, dim):
    """Metric state with a random full-rank factor."""
    return MetricState(rng.standard_normal((dim, dim)))


def random_blobs(rng, n_per=50, centers=((0, 0), (8, 8)), spread=0.7):
    """Labeled Gaussian blobs around the given centers."""
    points, labels = [], []
    for c, center in enumerate(centers):
        points.append(np.asarray(center, dtype=float)
                      + spread * rng.standard_normal((n_per, len(center))))
        labels.append(np.full(n_per, c))
    return np.concatenate(points), np.concatenate(labels)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
