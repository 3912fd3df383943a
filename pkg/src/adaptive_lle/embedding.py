"""Low-dimensional coordinates from the reconstruction weights.

The quadratic embedding cost is Y^T (I - W)^T (I - W) Y under zero-mean and
unit-covariance constraints, so the coordinates are eigenvectors of the
cost matrix for its smallest non-null eigenvalues.  Because every weight
row sums to one, the constant vector always spans (part of) the null space
and is discarded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import NumericalError
from .reconstruction import WeightMatrix

# Relative eigenvalue threshold separating the floating-point null space
# (observed <= ~2e-16 of lambda_max) from the smallest genuine embedding
# eigenvalues (observed >= ~2e-14 of lambda_max on 1k-point benchmarks).
DEFAULT_NULL_TOL = 2e-15


@dataclass
class EmbeddingResult:
    """Embedding coordinates plus fit diagnostics.

    Y has zero column means and (1/n) Y^T Y = I up to solver tolerance.
    ``eigenvalues`` are the d smallest above-null eigenvalues, ascending;
    ``null_eigenvalue`` is the largest eigenvalue that was treated as null.
    ``error_trace`` and ``eta_guard`` are filled by the fitting pipeline.
    """

    Y: np.ndarray
    eigenvalues: np.ndarray
    null_eigenvalue: float
    error_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    eta_guard: bool = False
    config: Any = None
    metric: Any = None  # final MetricState, for checkpointing

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def dim(self) -> int:
        return self.Y.shape[1]


def embedding_matrix(W: WeightMatrix, n: int) -> np.ndarray:
    """Dense symmetric PSD cost matrix (I - W)^T (I - W).

    Annihilates the constant vector whenever every weight row sums to 1.
    """
    if W.n != n:
        raise ValueError("weight matrix has %d rows, expected %d" % (W.n, n))
    A = np.eye(n)
    A[np.arange(n)[:, None], W.ids] -= W.weights
    return A.T @ A


def solve_embedding(M: np.ndarray, d: int,
                    null_tol: float = DEFAULT_NULL_TOL) -> EmbeddingResult:
    """Eigenvectors of the d smallest non-null eigenvalues, scaled to the
    embedding constraints.

    Eigenvalues at or below ``null_tol * lambda_max`` count as the null
    space and are skipped.  The selected eigenvectors are scaled by sqrt(n)
    so that (1/n) Y^T Y = I, and each column's sign is fixed so its
    largest-magnitude entry is positive.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("cost matrix must be square")
    if not 1 <= d <= n - 2:
        raise ValueError("need 1 <= d <= n-2 (d=%d, n=%d)" % (d, n))
    if np.max(np.abs(M - M.T)) > 1e-8 * max(1.0, float(np.max(np.abs(M)))):
        raise ValueError("cost matrix is not symmetric")
    try:
        vals, vecs = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("eigendecomposition failed: %s" % exc) from exc
    lam_max = float(vals[-1])
    threshold = null_tol * max(lam_max, 0.0)
    signal = np.flatnonzero(vals > threshold)
    if signal.size < d:
        raise ValueError(
            "only %d eigenvalues above the null threshold (need %d); "
            "the neighbor graph is too disconnected" % (signal.size, d))
    chosen = signal[:d]
    null_eigenvalue = float(vals[chosen[0] - 1]) if chosen[0] > 0 else float("nan")
    Y = np.sqrt(n) * vecs[:, chosen]
    # a nearly-degenerate null/signal gap lets eigh leak a sliver of the
    # constant direction into the selected vectors; the zero-mean constraint
    # is exact, so project it back out
    Y -= Y.mean(axis=0, keepdims=True)
    for j in range(d):
        col = Y[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            Y[:, j] = -col
    return EmbeddingResult(Y=Y, eigenvalues=vals[chosen].copy(),
                           null_eigenvalue=null_eigenvalue)
