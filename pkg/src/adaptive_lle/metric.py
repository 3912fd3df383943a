"""Learned Mahalanobis metric: state, distances, and update rules.

The metric M is kept in factored form M = L^T L, so it is positive
semi-definite by construction.  Updates either act on the factor L directly
(``factorL`` mode, PSD for free) or on M itself (``directM`` mode, repaired
by clamping negative eigenvalues to zero whenever a step leaves the PSD
cone).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericalError

# smallest eigenvalue below which a direct update is flagged as indefinite
PSD_WARN_TOL = -1e-8


@dataclass
class MetricState:
    """Metric M = L^T L with optional Adam moment accumulators.

    ``L`` is the canonical state; M is derived on demand.  ``step`` counts
    applied updates.  ``psd_warning`` is set by a direct-M update whose raw
    result was indefinite before repair.
    """

    L: np.ndarray
    step: int = 0
    adam_m: np.ndarray | None = None
    adam_v: np.ndarray | None = None
    psd_warning: bool = False

    def __post_init__(self):
        self.L = np.asarray(self.L, dtype=float)
        if self.L.ndim != 2 or self.L.shape[0] != self.L.shape[1]:
            raise ValueError("L must be a square matrix")
        if not np.all(np.isfinite(self.L)):
            raise ValueError("L contains NaN or Inf")

    @property
    def dim(self) -> int:
        return self.L.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """The metric M = L^T L (symmetric PSD)."""
        return self.L.T @ self.L


@dataclass
class OptimizerConfig:
    """Hyper-parameters for the metric update.

    method : 'sgd' or 'adam'
    eta : learning rate (> 0)
    lam : regularization strength added as +lam*L after each update (>= 0)
    mode : 'factorL' (update L, PSD guaranteed) or 'directM' (update M,
        repaired by eigenvalue clamping when a step leaves the PSD cone)
    enforce_eta_bound : clamp eta to 0.9x the stability bound whenever it
        exceeds 2 / lambda_max of the residual outer-product sum
    """

    method: str = "sgd"
    eta: float = 1e-3
    lam: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    mode: str = "factorL"
    enforce_eta_bound: bool = True

    def __post_init__(self):
        if self.method not in ("sgd", "adam"):
            raise ValueError("method must be 'sgd' or 'adam'")
        if self.mode not in ("factorL", "directM"):
            raise ValueError("mode must be 'factorL' or 'directM'")
        if not self.eta > 0:
            raise ValueError("learning rate eta must be positive")
        if self.lam < 0:
            raise ValueError("regularization lam must be non-negative")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if not self.eps > 0:
            raise ValueError("Adam eps must be positive")


def init_identity(dim: int) -> MetricState:
    """Identity metric: distances reduce to Euclidean."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return MetricState(np.eye(dim))


def init_random(dim: int, sigma: float, seed: int = 0) -> MetricState:
    """Random factor with i.i.d. N(0, sigma^2) entries; M = L^T L is PSD."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    rng = np.random.default_rng(seed)
    return MetricState(sigma * rng.standard_normal((dim, dim)))


def metric_from_matrix(M: np.ndarray) -> MetricState:
    """Build a state from a user-supplied symmetric PSD metric matrix."""
    C = cholesky_factor(M)
    return MetricState(C.T)


def mahalanobis_distance(x, y, state: MetricState) -> float:
    """sqrt((x-y)^T M (x-y)), computed as ||L (x-y)|| so it is never negative."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (state.dim,) or y.shape != (state.dim,):
        raise ValueError("vectors must have length %d" % state.dim)
    return float(np.linalg.norm(state.L @ (x - y)))


def _residual_array(residuals, dim: int | None = None) -> np.ndarray:
    """Stack residual vectors into an (N, D) array; N may be zero."""
    R = np.asarray(residuals, dtype=float)
    if R.ndim == 1:
        R = R.reshape(0, dim or 0) if R.size == 0 else R[None, :]
    return R


def residual_gradient_M(residuals) -> np.ndarray:
    """Gradient of sum_i r_i^T M r_i with respect to M: sum_i r_i r_i^T."""
    R = _residual_array(residuals)
    return R.T @ R


def gradient_L(state: MetricState, residuals) -> np.ndarray:
    """Gradient of the error with respect to the factor: 2 L sum_i r_i r_i^T."""
    R = _residual_array(residuals, state.dim)
    if R.size == 0:
        return np.zeros_like(state.L)
    return 2.0 * state.L @ (R.T @ R)


def _factor_from_psd(M: np.ndarray) -> tuple[np.ndarray, float]:
    """Eigendecompose M, clamp negative eigenvalues to 0, return (L, min_eig)."""
    vals, vecs = np.linalg.eigh((M + M.T) / 2.0)
    clamped = np.maximum(vals, 0.0)
    # rows sqrt(lambda_k) v_k^T give L^T L = V diag(lambda) V^T
    L = (np.sqrt(clamped)[:, None] * vecs.T)
    return L, float(vals[0])


def sgd_update_M(state: MetricState, residuals, eta: float) -> MetricState:
    """One direct gradient step M <- M - eta * sum_i r_i r_i^T.

    Direct steps can leave the PSD cone; the result is re-projected by
    clamping negative eigenvalues to zero so distances stay well-defined,
    and ``psd_warning`` is set when that happened beyond tolerance.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    R = _residual_array(residuals, state.dim)
    with np.errstate(over="ignore", invalid="ignore"):
        M = state.matrix
        if R.size:
            M = M - eta * (R.T @ R)
    if not np.all(np.isfinite(M)):
        raise NumericalError("direct metric update produced non-finite entries")
    L, min_eig = _factor_from_psd(M)
    return MetricState(L, step=state.step + 1, psd_warning=min_eig < PSD_WARN_TOL)


def sgd_update_L(state: MetricState, residuals, eta: float,
                 lam: float = 0.0) -> MetricState:
    """One factored gradient step L <- L - 2*eta*L*sum_i r_i r_i^T + lam*L."""
    R = _residual_array(residuals, state.dim)
    L = state.L
    with np.errstate(over="ignore", invalid="ignore"):
        if R.size:
            L = L - 2.0 * eta * state.L @ (R.T @ R)
        L = L + lam * state.L
    if not np.all(np.isfinite(L)):
        raise NumericalError("factored metric update produced non-finite entries")
    return MetricState(L, step=state.step + 1, adam_m=state.adam_m,
                       adam_v=state.adam_v)


def adam_update_L(state: MetricState, gradient: np.ndarray,
                  config: OptimizerConfig) -> MetricState:
    """One Adam step on the factor with bias-corrected moments."""
    g = np.asarray(gradient, dtype=float)
    if g.shape != state.L.shape:
        raise ValueError("gradient shape does not match the factor")
    m = state.adam_m if state.adam_m is not None else np.zeros_like(state.L)
    v = state.adam_v if state.adam_v is not None else np.zeros_like(state.L)
    t = state.step + 1
    with np.errstate(over="ignore", invalid="ignore"):
        m = config.beta1 * m + (1.0 - config.beta1) * g
        v = config.beta2 * v + (1.0 - config.beta2) * g * g
        m_hat = m / (1.0 - config.beta1 ** t)
        v_hat = v / (1.0 - config.beta2 ** t)
        L = state.L - config.eta * m_hat / (np.sqrt(v_hat) + config.eps)
        if config.lam > 0:
            L = L + config.lam * L
    if not np.all(np.isfinite(L)):
        raise NumericalError("Adam metric update produced non-finite entries")
    return MetricState(L, step=t, adam_m=m, adam_v=v)


def learning_rate_bound(residuals) -> float:
    """Stability bound 2 / lambda_max(sum_i r_i r_i^T).

    Returns ``math.inf`` when all residuals vanish (no curvature to bound).
    """
    R = _residual_array(residuals)
    if R.size == 0 or not np.any(R):
        return math.inf
    lmax = float(np.linalg.eigvalsh(R.T @ R)[-1])
    if lmax <= 0:
        return math.inf
    return 2.0 / lmax


def cholesky_factor(M: np.ndarray) -> np.ndarray:
    """Lower-triangular C with C C^T = M for a symmetric PSD matrix.

    Eigenvalues in the numerical-noise band just below zero are absorbed by
    a trace-scaled jitter before factoring; anything below -1e-8 is rejected
    as indefinite.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    if np.max(np.abs(M - M.T)) > 1e-8:
        raise ValueError("M is not symmetric within 1e-8")
    M = (M + M.T) / 2.0
    min_eig = float(np.linalg.eigvalsh(M)[0])
    if min_eig < -1e-8:
        raise ValueError("M is indefinite: smallest eigenvalue %.3e" % min_eig)
    if min_eig < 1e-12:
        dim = M.shape[0]
        M = M + (1e-10 * np.trace(M) / dim) * np.eye(dim)
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise ValueError("M is not positive definite within tolerance") from None


def save_metric(state: MetricState, path) -> None:
    """Write the factor L as a D x D CSV (one matrix row per line)."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in state.L:
            f.write(",".join(repr(float(v)) for v in row) + "\n")


def load_metric(path) -> MetricState:
    """Read a factor L written by :func:`save_metric`."""
    L = np.loadtxt(path, delimiter=",", ndmin=2)
    if L.shape[0] != L.shape[1]:
        raise ValueError("metric file must hold a square matrix, got %s"
                         % (L.shape,))
    return MetricState(L)


def clamp_eta(opt: OptimizerConfig, bound: float) -> OptimizerConfig:
    """Return a config whose eta respects the stability bound."""
    if opt.eta >= bound:
        return replace(opt, eta=0.9 * bound)
    return opt
