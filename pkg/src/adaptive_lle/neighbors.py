"""Exact K-nearest-neighbor search under the active metric.

Brute force over all pairs: the metric changes between runs, the datasets
stay at desk scale, and downstream weight tests require exactness, so no
spatial index is used.  Ties are broken by the smaller point index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataMatrix
from .metric import MetricState


@dataclass
class NeighborIndex:
    """Per-point neighbor ids and distances, ascending by distance.

    ids[i] never contains i; each row has exactly K entries.
    """

    ids: np.ndarray        # (n, K) int
    distances: np.ndarray  # (n, K) float

    @property
    def k(self) -> int:
        return self.ids.shape[1]

    @property
    def n(self) -> int:
        return self.ids.shape[0]


def knn(X, K: int, state: MetricState) -> NeighborIndex:
    """Exact K nearest neighbors of every point under d_M(x, y) = ||L(x-y)||."""
    values = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    n = values.shape[0]
    if not 1 <= K <= n - 1:
        raise ValueError("K must satisfy 1 <= K <= n-1 (K=%d, n=%d)" % (K, n))
    if values.shape[1] != state.dim:
        raise ValueError("metric dimension %d does not match data dimension %d"
                         % (state.dim, values.shape[1]))
    Z = values @ state.L.T
    sq = np.einsum("ij,ij->i", Z, Z)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (Z @ Z.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")[:, :K]
    rows = np.arange(n)[:, None]
    return NeighborIndex(ids=order, distances=np.sqrt(d2[rows, order]))
