"""Diffusion-filter denoising, spectral clustering, and multiscale graph denoising.

The multiscale scheme (``mgd``) smooths a dataset with a short diffusion
filter, splits it into spectral clusters, recurses into each cluster
with a freshly built operator, and averages the recursive result back
into the input. Each recursion level therefore contributes half the
correction of the level above it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import SizeError, ValidationError
from .operators import (
    DataMatrix,
    DiffusionOperator,
    KernelConfig,
    as_data_matrix,
    diffusion_operator,
    kernel_from_config,
)
from .spectral import eigendecompose

DEFAULT_LOCAL_T = 3


@dataclass(frozen=True)
class MgdConfig:
    """Knobs of the multiscale denoiser.

    t is the local smoothing timestep, tau the minimum cluster size that
    still recurses, c the split arity, max_depth the recursion cap.
    tau >= c so every split can eventually produce sub-tau clusters, and
    c >= 2 because a single cluster cannot shrink.
    """

    t: int = DEFAULT_LOCAL_T
    tau: int = 16
    c: int = 2
    max_depth: int = 4

    def __post_init__(self):
        if self.t < 1:
            raise ValidationError(f"t must be >= 1, got {self.t}")
        if self.c < 2:
            raise ValidationError(f"c must be >= 2, got {self.c}")
        if self.tau < self.c:
            raise ValidationError(f"tau ({self.tau}) must be >= c ({self.c})")
        if self.max_depth < 1:
            raise ValidationError(f"max_depth must be >= 1, got {self.max_depth}")


@dataclass
class MgdTelemetry:
    """Per-node correction log filled in by ``mgd``.

    ``corrections`` holds (depth, frobenius norm of output - input) per
    recursion node; ``degenerate_stops`` counts branches cut because
    clustering failed to split.
    """

    corrections: List[tuple] = field(default_factory=list)
    degenerate_stops: int = 0

    def level_norms(self) -> dict:
        levels: dict = {}
        for depth, norm in self.corrections:
            levels[depth] = levels.get(depth, 0.0) + norm**2
        return {depth: float(np.sqrt(total)) for depth, total in sorted(levels.items())}


def diffusion_denoise(op: DiffusionOperator, data, t: int) -> "DataMatrix | np.ndarray":
    """Low-pass denoise a signal by t applications of the operator: P^t X."""
    if t != int(t) or t < 1:
        raise ValidationError(f"t must be a positive integer, got {t}")
    if isinstance(data, DataMatrix):
        if data.n_rows != op.n:
            raise ValidationError(f"data has {data.n_rows} rows, operator expects {op.n}")
        return data.with_values(_apply_steps(op.values, data.values, int(t)))
    values = np.asarray(data, dtype=np.float64)
    if values.shape[0] != op.n:
        raise ValidationError(f"data has {values.shape[0]} rows, operator expects {op.n}")
    return _apply_steps(op.values, values, int(t))


def _apply_steps(p: np.ndarray, x: np.ndarray, t: int) -> np.ndarray:
    out = x
    for _ in range(t):
        out = p @ out
    return out


def content_seed(values: np.ndarray, decimals: int = 6) -> int:
    """Order-invariant 63-bit hash of a matrix's rows.

    Rows are rounded (to swallow permutation-induced round-off), hashed
    individually, and combined by modular addition, so any row
    permutation of the same content produces the same seed.
    """
    rounded = np.round(np.asarray(values, dtype=np.float64), decimals) + 0.0
    acc = 0
    for row in np.ascontiguousarray(rounded):
        digest = hashlib.sha256(row.tobytes()).digest()
        acc = (acc + int.from_bytes(digest[:8], "little")) % (1 << 63)
    return acc


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[int(rng.integers(n))]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:  # all remaining points coincide with a center
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = points[idx]
        np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1), out=d2)
    return centers


def _kmeans(points: np.ndarray, k: int, seed: int, max_iter: int = 100) -> np.ndarray:
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(points, k, rng)
    labels = np.full(points.shape[0], -1, dtype=np.int64)
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = points[labels == j]
            if len(members):
                centers[j] = members.mean(axis=0)
    return labels


def spectral_cluster(op: DiffusionOperator, c: int, seed: Optional[int] = None) -> List[np.ndarray]:
    """Partition the operator's rows into c groups.

    Runs k-means (k-means++ init, single restart, 100 iterations) on the
    row-normalized top-c eigenvectors of the symmetric conjugate (the
    leading eigenvector included: it keeps same-component rows on one
    hemisphere, which makes the split stable even when the graph is
    nearly disconnected). The rows are processed in a canonical
    (lexicographic) order and the seed defaults to an order-invariant
    content hash, so the partition depends on the data, not row order.
    Caveat: a (near-)degenerate spectrum, e.g. a perfectly round cloud,
    leaves the eigenbasis rotation unpinned, so the chosen split of such
    data is arbitrary and may vary with row order; generic anisotropic
    data is stable.

    Returns a list of c disjoint index arrays covering all rows.
    """
    if c < 2:
        raise ValidationError(f"c must be >= 2, got {c}")
    if c > op.n:
        raise SizeError(f"cannot split {op.n} rows into {c} clusters")
    eig = eigendecompose(op)
    emb = eig.ortho_vectors[:, :c].copy()
    # sign convention: largest-magnitude entry of each column positive
    for j in range(emb.shape[1]):
        peak = np.argmax(np.abs(emb[:, j]))
        if emb[peak, j] < 0:
            emb[:, j] = -emb[:, j]
    norms = np.linalg.norm(emb, axis=1)
    nonzero = norms > 0.0
    emb[nonzero] /= norms[nonzero, None]
    if seed is None:
        seed = content_seed(op.values)
    order = np.lexsort(emb.T[::-1])
    sorted_labels = _kmeans(emb[order], c, seed & 0x7FFFFFFFFFFFFFFF)
    labels = np.empty(op.n, dtype=np.int64)
    labels[order] = sorted_labels
    return [np.flatnonzero(labels == j) for j in range(c)]


def mgd(
    data,
    config: MgdConfig,
    kernel: Optional[KernelConfig] = None,
    telemetry: Optional[MgdTelemetry] = None,
) -> DataMatrix:
    """Multiscale graph denoising.

    Base case: fewer than tau rows (or the depth cap) returns the input
    unchanged. Otherwise a fresh operator is built from the current
    data, the data is smoothed t steps, spectral clusters are computed,
    the smoothed data is recursively denoised within each cluster,
    reassembled in the original row order, and averaged with the input.
    A clustering that fails to split (one cluster holding every row)
    stops that branch: its smoothed data stands in for the recursion and
    ``telemetry.degenerate_stops`` is incremented.

    Output shape and row identities match the input exactly.
    """
    data = as_data_matrix(data)
    kernel = kernel or KernelConfig()
    telemetry = telemetry if telemetry is not None else MgdTelemetry()
    out = _mgd_recurse(data.values, config, kernel, 0, telemetry)
    return data.with_values(out)


def _mgd_recurse(
    values: np.ndarray,
    config: MgdConfig,
    kernel: KernelConfig,
    depth: int,
    telemetry: MgdTelemetry,
) -> np.ndarray:
    n = values.shape[0]
    if n < config.tau or depth >= config.max_depth:
        return values
    op = diffusion_operator(kernel_from_config(DataMatrix.from_array(values), kernel))
    smoothed = _apply_steps(op.values, values, config.t)
    clusters = spectral_cluster(op, config.c, seed=content_seed(values))
    if any(len(cl) == n for cl in clusters):
        telemetry.degenerate_stops += 1
        assembled = smoothed
    else:
        assembled = np.empty_like(values)
        for cl in clusters:
            if len(cl) == 0:
                continue
            assembled[cl] = _mgd_recurse(smoothed[cl], config, kernel, depth + 1, telemetry)
    result = (values + assembled) / 2.0
    telemetry.corrections.append((depth, float(np.linalg.norm(result - values))))
    return result
