"""Quantitative evaluation: kNN classification, DeMAP, and mutual information.

These are the scoring functions behind the benchmark protocols: kNN
accuracy measures how well an embedding separates known classes, DeMAP
rank-correlates embedding distances against noiseless geodesics, and
the binned mutual-information estimator scores recovered cross-modality
feature associations.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist
from scipy.stats import spearmanr

from .denoise import diffusion_denoise
from .errors import ValidationError
from .fusion import FusionConfig, fuse
from .operators import (
    DiffusionOperator,
    diffusion_operator,
    kernel_from_config,
    pairwise_sq_dists,
    power,
)
from .spectral import eigendecompose, select_timescale

MODALITY_SPECIFIC = "modality_specific"
UNDENOISED = "none"


@dataclass
class EvalReport:
    """One metric's results plus the configuration that produced them."""

    metric: str
    values: object
    config: dict = field(default_factory=dict)
    n_points: int = 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "metric": self.metric,
                "values": self.values,
                "config": self.config,
                "n_points": self.n_points,
            },
            indent=2,
            sort_keys=True,
        )


def _coords_of(embedding) -> np.ndarray:
    coords = getattr(embedding, "coords", embedding)
    return np.asarray(coords, dtype=np.float64)


def stratified_split(labels: np.ndarray, test_fraction: float, seed: int):
    """Per-class 80/20-style split; every class keeps >= 1 point on each side."""
    from .rng import rng_for

    labels = np.asarray(labels)
    train_idx, test_idx = [], []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < 2:
            raise ValidationError(
                f"class {cls} has {len(members)} member(s); stratified split needs >= 2"
            )
        members = members[rng_for(seed, "split", int(cls)).permutation(len(members))]
        n_test = min(max(1, round(test_fraction * len(members))), len(members) - 1)
        test_idx.append(members[:n_test])
        train_idx.append(members[n_test:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(test_idx))


def knn_accuracy(
    embedding,
    labels,
    k: int = 5,
    test_fraction: float = 0.2,
    seed: int = 0,
) -> float:
    """Test accuracy of a k-nearest-neighbor vote in embedding space.

    The data is split per class (stratified, seeded); each test point is
    classified by majority vote over its k nearest training points under
    Euclidean distance. Vote ties break toward the tied class seen
    earliest in distance order.
    """
    coords = _coords_of(embedding)
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2:
        raise ValidationError("kNN evaluation needs at least 2 classes")
    train, test = stratified_split(labels, test_fraction, seed)
    d2 = pairwise_sq_dists(coords[test], coords[train])
    kk = min(k, len(train))
    correct = 0
    for i in range(len(test)):
        neighbor_order = np.argsort(d2[i], kind="stable")[:kk]
        neighbor_labels = labels[train][neighbor_order]
        counts: dict = {}
        for lab in neighbor_labels:
            counts[int(lab)] = counts.get(int(lab), 0) + 1
        best = max(counts.values())
        tied = {lab for lab, cnt in counts.items() if cnt == best}
        for lab in neighbor_labels:  # distance order; first tied class wins
            if int(lab) in tied:
                prediction = int(lab)
                break
        correct += prediction == labels[test[i]]
    return correct / len(test)


def demap(embedding, ground_truth_geodesics: np.ndarray) -> float:
    """Spearman correlation of embedding distances vs noiseless geodesics.

    Both distance sets are reduced to their strict upper triangles; rank
    correlation makes the score invariant to monotone distortion of
    either side.
    """
    coords = _coords_of(embedding)
    geo = np.asarray(ground_truth_geodesics, dtype=np.float64)
    n = coords.shape[0]
    if geo.shape != (n, n):
        raise ValidationError(f"geodesic matrix shape {geo.shape}, expected ({n}, {n})")
    if np.max(np.abs(geo - geo.T)) > 1e-8 or np.max(np.abs(np.diag(geo))) > 1e-12:
        raise ValidationError("geodesic matrix must be symmetric with zero diagonal")
    iu = np.triu_indices(n, 1)
    # pdist's direct formula keeps tied distances exactly tied, so a
    # monotone-identical ranking scores exactly 1
    emb_d = pdist(coords)
    geo_d = geo[iu]
    if np.ptp(emb_d) == 0.0 or np.ptp(geo_d) == 0.0:
        raise ValidationError("constant distance vector: correlation undefined")
    rho = spearmanr(geo_d, emb_d).statistic
    return float(rho)


def mutual_information(a, b, bins: int = 8) -> float:
    """Plug-in mutual information (nats) under equal-width binning.

    Each variable is binned over its own observed range; empty cells
    contribute zero. A zero-variance input makes MI zero by definition
    (flagged with a warning).
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValidationError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size < bins * bins:
        raise ValidationError(f"need at least bins^2 = {bins * bins} samples, got {a.size}")
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        warnings.warn("zero-variance input: mutual information defined as 0", stacklevel=2)
        return 0.0
    if b.tobytes() < a.tobytes():
        a, b = b, a  # canonical argument order makes MI(a,b) == MI(b,a) exactly
    counts, _, _ = np.histogram2d(a, b, bins=bins)
    p = counts / counts.sum()
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    nz = p > 0.0
    mi = (p[nz] * np.log(p[nz] / (np.outer(px, py)[nz]))).sum()
    return float(max(mi, 0.0))


def _modality_operator(data, cfg: FusionConfig) -> DiffusionOperator:
    return diffusion_operator(kernel_from_config(data, cfg.kernel))


def denoise_modalities(mmset, strategy, cfg: Optional[FusionConfig] = None):
    """Denoise both modalities per the named strategy's operator.

    "none" returns the raw values; "modality_specific" filters each
    modality with its own operator powered to its entropy elbow; any
    fusion strategy filters both modalities with the single fused
    operator.
    """
    cfg = cfg or FusionConfig()
    if strategy == UNDENOISED:
        return mmset.modality1, mmset.modality2
    if strategy == MODALITY_SPECIFIC:
        out = []
        for data in (mmset.modality1, mmset.modality2):
            op = _modality_operator(data, cfg)
            elbow = select_timescale(eigendecompose(op), cfg.t_max).elbow
            out.append(diffusion_denoise(power(op, elbow), data, 1))
        return tuple(out)
    fused = fuse(mmset.modality1, mmset.modality2, strategy, cfg)
    return (
        mmset.modality1.with_values(fused.values @ mmset.modality1.values),
        mmset.modality2.with_values(fused.values @ mmset.modality2.values),
    )


def mi_recovery_benchmark(
    mmset,
    strategies: Sequence[str],
    cfg: Optional[FusionConfig] = None,
    bins: int = 8,
) -> EvalReport:
    """Mean planted-pair mutual information per denoising strategy.

    For each strategy the modalities are denoised (see
    ``denoise_modalities``), then MI is computed between every planted
    feature pair and averaged.
    """
    if not mmset.coupled_pairs:
        raise ValidationError("dataset carries no planted coupled feature pairs")
    cfg = cfg or FusionConfig()
    results = {}
    for strategy in strategies:
        den1, den2 = denoise_modalities(mmset, strategy, cfg)
        per_pair = [
            mutual_information(den1.values[:, c1], den2.values[:, c2], bins)
            for c1, c2 in mmset.coupled_pairs
        ]
        tag = strategy if isinstance(strategy, str) else strategy.value
        results[tag] = {"mean": float(np.mean(per_pair)), "per_pair": per_pair}
    return EvalReport(
        metric="mutual_information",
        values=results,
        config={
            "strategies": [s if isinstance(s, str) else s.value for s in strategies],
            "bins": bins,
            "noise_spec": mmset.noise_spec,
            "seed": mmset.seed,
        },
        n_points=mmset.modality1.n_rows,
    )
