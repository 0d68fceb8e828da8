"""Affinity kernels and row-stochastic diffusion operators.

A dataset enters as a dense ``DataMatrix``. A Gaussian kernel turns it
into a symmetric affinity matrix, row-normalization turns that into a
Markov transition matrix (the diffusion operator), and integer powers
simulate multi-step random walks. Everything is dense double precision;
the intended scale is a few thousand points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import NumericalError, SizeError, ValidationError

MEDIAN_HEURISTIC = "median-heuristic"


@dataclass
class DataMatrix:
    """Dense points-by-features matrix with stable integer row identities.

    Parameters
    ----------
    values : (N, D) ndarray
        Observation matrix, finite floats.
    row_ids : (N,) ndarray of int
        Unique identifier per observation. Transformations that do not
        subset rows must carry these through unchanged.
    """

    values: np.ndarray
    row_ids: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValidationError(f"values must be 2-D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("values contain NaN or Inf")
        self.row_ids = np.asarray(self.row_ids, dtype=np.int64)
        if self.row_ids.shape != (self.values.shape[0],):
            raise ValidationError(
                f"row_ids shape {self.row_ids.shape} does not match {self.values.shape[0]} rows"
            )
        if len(np.unique(self.row_ids)) != len(self.row_ids):
            raise ValidationError("row_ids must be unique")

    @classmethod
    def from_array(cls, values, row_ids=None) -> "DataMatrix":
        values = np.asarray(values, dtype=np.float64)
        if row_ids is None:
            row_ids = np.arange(values.shape[0], dtype=np.int64)
        return cls(values, row_ids)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray) -> "DataMatrix":
        """Same rows, new feature values (identities preserved)."""
        return DataMatrix(values, self.row_ids)

    def take(self, indices) -> "DataMatrix":
        """Row subset; identities follow the rows."""
        indices = np.asarray(indices)
        return DataMatrix(self.values[indices], self.row_ids[indices])


def as_data_matrix(x) -> DataMatrix:
    if isinstance(x, DataMatrix):
        return x
    return DataMatrix.from_array(x)


@dataclass(frozen=True)
class KernelConfig:
    """Bandwidth policy shared across the pipeline.

    ``bandwidth`` is either an explicit epsilon (squared-distance units)
    or ``"median-heuristic"``; the heuristic squares the median over
    points of each point's ``knn_k``-th nearest-neighbor distance.
    """

    bandwidth: Union[float, str] = MEDIAN_HEURISTIC
    knn_k: int = 5


@dataclass
class Kernel:
    """Symmetric nonnegative affinity matrix with unit diagonal.

    ``bandwidth`` stores the resolved epsilon actually used, even when
    the kernel was built with the median heuristic.
    """

    values: np.ndarray
    bandwidth: float


@dataclass
class DiffusionOperator:
    """Row-stochastic transition matrix P = D^-1 K plus its degrees.

    ``degrees`` are the row sums of the source kernel; they define the
    symmetric conjugate M = D^1/2 P D^-1/2 used for eigendecomposition.
    ``eigen`` caches that decomposition once computed.
    """

    values: np.ndarray
    degrees: np.ndarray
    eigen: Optional[object] = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def pairwise_sq_dists(a: np.ndarray, b: Optional[np.ndarray] = None) -> np.ndarray:
    """Squared Euclidean distances via the norm expansion, clamped at zero.

    With one argument the result is exactly symmetric with an exactly
    zero diagonal (upper triangle computed once and mirrored).
    """
    a = np.asarray(a, dtype=np.float64)
    if b is None:
        g = a @ a.T
        sq = np.diag(g).copy()
        d2 = sq[:, None] + sq[None, :] - 2.0 * g
        np.maximum(d2, 0.0, out=d2)
        upper = np.triu(d2, 1)
        return upper + upper.T
    b = np.asarray(b, dtype=np.float64)
    d2 = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def median_bandwidth(sq_dists: np.ndarray, knn_k: int = 5) -> float:
    """Median k-NN bandwidth from a squared-distance matrix.

    Takes each point's ``knn_k``-th nearest-neighbor distance (self
    excluded; capped at N-1 for tiny inputs), then squares the median.
    When duplicates drive the median to zero it falls back to a tenth
    of the smallest positive squared distance (tight enough that exact
    duplicates stay glued without bridging distinct groups), then to
    1.0 if every point coincides.
    """
    n = sq_dists.shape[0]
    if n < 2:
        raise SizeError("bandwidth heuristic needs at least 2 points")
    k = min(int(knn_k), n - 1)
    if k < 1:
        raise ValidationError(f"knn_k must be >= 1, got {knn_k}")
    d = np.sqrt(np.sort(sq_dists, axis=1)[:, k])
    eps = float(np.median(d)) ** 2
    if eps <= 0.0:
        positive = sq_dists[sq_dists > 0.0]
        eps = float(positive.min()) / 10.0 if positive.size else 1.0
    return eps


def gaussian_kernel(data, bandwidth: Union[float, str] = MEDIAN_HEURISTIC, *, knn_k: int = 5) -> Kernel:
    """Gaussian affinity kernel K(i,j) = exp(-||x_i - x_j||^2 / eps).

    Parameters
    ----------
    data : DataMatrix or array-like
        N x D observations, N >= 2.
    bandwidth : float or "median-heuristic"
        Explicit epsilon (must be positive) or the median k-NN rule.
    knn_k : int
        Neighbor index used by the heuristic (default 5).

    Returns
    -------
    Kernel
        Exactly symmetric, unit diagonal, entries in [0, 1]; the
        resolved epsilon is recorded on the result.
    """
    data = as_data_matrix(data)
    if data.n_rows < 2:
        raise SizeError(f"kernel needs at least 2 points, got {data.n_rows}")
    d2 = pairwise_sq_dists(data.values)
    if isinstance(bandwidth, str):
        if bandwidth != MEDIAN_HEURISTIC:
            raise ValidationError(f"unknown bandwidth policy {bandwidth!r}")
        eps = median_bandwidth(d2, knn_k)
    else:
        eps = float(bandwidth)
        if not np.isfinite(eps) or eps <= 0.0:
            raise ValidationError(f"bandwidth must be positive, got {bandwidth}")
    values = np.exp(-d2 / eps)
    return Kernel(values, eps)


def kernel_from_config(data, cfg: KernelConfig) -> Kernel:
    return gaussian_kernel(data, cfg.bandwidth, knn_k=cfg.knn_k)


def diffusion_operator(kernel: Kernel) -> DiffusionOperator:
    """Row-normalize a kernel into a Markov transition matrix P = D^-1 K."""
    degrees = kernel.values.sum(axis=1)
    if np.any(degrees <= 0.0):
        # unreachable for a unit-diagonal kernel; guard anyway
        raise NumericalError("kernel has a nonpositive row sum")
    return DiffusionOperator(kernel.values / degrees[:, None], degrees)


def stochastic_matrix_power(values: np.ndarray, t: int) -> np.ndarray:
    """Integer power of a row-stochastic matrix by repeated squaring.

    Rows are renormalized once at the end (t >= 2 only) to absorb
    round-off drift; t = 0 returns the identity, t = 1 the input.
    """
    if t != int(t) or t < 0:
        raise ValidationError(f"power exponent must be a nonnegative integer, got {t}")
    t = int(t)
    n = values.shape[0]
    if t == 0:
        return np.eye(n)
    if t == 1:
        return values
    result = None
    base = values
    k = t
    while k:
        if k & 1:
            result = base if result is None else result @ base
        k >>= 1
        if k:
            base = base @ base
    return result / result.sum(axis=1, keepdims=True)


def power(op: DiffusionOperator, t: int) -> DiffusionOperator:
    """t-step operator P^t; degrees carry over (same symmetric conjugate)."""
    return DiffusionOperator(stochastic_matrix_power(op.values, t), op.degrees)


def stationary_distribution(op: DiffusionOperator) -> np.ndarray:
    """Stationary vector of P = D^-1 K with symmetric K: degrees / sum."""
    return op.degrees / op.degrees.sum()
