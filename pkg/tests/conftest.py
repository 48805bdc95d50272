import numpy as np
import pytest

from saco.data import Patch
from saco.graphs import build_feature_affinity, build_spatial_affinity


def make_patches(seed, m=30, n_classes=3, dim=5, clustered=False):
    """Random labeled patches on the unit square."""
    rng = np.random.default_rng(seed)
    if clustered:
        centers = rng.normal(0.0, 1.0, size=(n_classes * 4, dim))
        labels = rng.integers(0, n_classes, size=m)
        which = rng.integers(0, 4, size=m)
        feats = centers[labels * 4 + which] + 0.25 * rng.normal(size=(m, dim))
    else:
        feats = rng.normal(size=(m, dim))
        labels = rng.integers(0, n_classes, size=m)
    coords = rng.uniform(0.0, 1.0, size=(m, 2))
    return [
        Patch(i, feats[i], (float(coords[i, 0]), float(coords[i, 1])), int(labels[i]), 0)
        for i in range(m)
    ]


def make_graphs(patches, k_nn=8):
    S = build_feature_affinity(patches, k_nn=k_nn)
    L = build_spatial_affinity(patches, k_nn=k_nn)
    return S, L


@pytest.fixture
def small_instance():
    patches = make_patches(11, m=24)
    S, L = make_graphs(patches, k_nn=6)
    return patches, S, L
