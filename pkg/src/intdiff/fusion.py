"""Fusing two modality-specific diffusion operators into one walk.

The headline construction multiplies the per-modality operators raised
to coprime exponents derived from their spectral-entropy elbows, after
denoising each modality at multiple scales. The remaining strategies are
the comparison baselines: plain alternating products, two ablations, and
four single-kernel constructions (feature concatenation, distance
addition, affinity addition, affinity multiplication).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .denoise import MgdConfig, mgd
from .errors import AlignmentError, ValidationError
from .operators import (
    DataMatrix,
    DiffusionOperator,
    Kernel,
    KernelConfig,
    MEDIAN_HEURISTIC,
    as_data_matrix,
    diffusion_operator,
    kernel_from_config,
    median_bandwidth,
    pairwise_sq_dists,
    stochastic_matrix_power,
)
from .spectral import DEFAULT_T_MAX, eigendecompose, select_timescale


class FusionStrategy(enum.Enum):
    """Available operator-fusion rules."""

    INTEGRATED = "integrated"
    ALTERNATING = "alternating"
    ALTERNATING_LOCAL = "alternating_local"
    ALTERNATING_POWERED = "alternating_powered"
    CONCATENATION = "concatenation"
    DISTANCE_SUM = "distance_sum"
    AFFINITY_SUM = "affinity_sum"
    AFFINITY_PRODUCT = "affinity_product"

    @classmethod
    def from_string(cls, tag: str) -> "FusionStrategy":
        try:
            return cls(tag)
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ValidationError(f"unknown fusion strategy {tag!r}; expected one of: {valid}")


@dataclass(frozen=True)
class FusionConfig:
    """Shared settings for every fusion strategy.

    All strategies use the same kernel bandwidth policy so the fusion
    rule is the only variable under comparison. ``order`` picks which
    modality's operator is applied first in product constructions.
    """

    kernel: KernelConfig = field(default_factory=KernelConfig)
    mgd: MgdConfig = field(default_factory=MgdConfig)
    alternating_steps: int = 1
    t_max: int = DEFAULT_T_MAX
    order: Tuple[int, int] = (1, 2)

    def __post_init__(self):
        if self.alternating_steps < 1:
            raise ValidationError("alternating_steps must be >= 1")
        if tuple(sorted(self.order)) != (1, 2):
            raise ValidationError(f"order must be a permutation of (1, 2), got {self.order}")


@dataclass
class IntegratedOperator:
    """A fused row-stochastic operator with its provenance.

    ``exponents`` is the (t1, t2) pair actually applied; for elbow-driven
    strategies it equals ``source_elbows`` divided by their gcd.
    ``details`` records bandwidths, elbows and entropy curves for
    sidecar serialization.
    """

    values: np.ndarray
    exponents: Tuple[int, int]
    strategy: FusionStrategy
    source_elbows: Optional[Tuple[int, int]] = None
    order: Tuple[int, int] = (1, 2)
    details: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _check_aligned(data1: DataMatrix, data2: DataMatrix) -> None:
    if data1.n_rows != data2.n_rows:
        raise AlignmentError(
            f"modalities have {data1.n_rows} and {data2.n_rows} rows"
        )
    if not np.array_equal(data1.row_ids, data2.row_ids):
        raise AlignmentError("modalities do not share identical row_ids in identical order")


def alternating(op1: DiffusionOperator, op2: DiffusionOperator, t: int) -> IntegratedOperator:
    """Alternating walk (P1 P2)^t hopping between the two modality graphs."""
    if op1.n != op2.n:
        raise AlignmentError(f"operators have sizes {op1.n} and {op2.n}")
    if t != int(t) or t < 1:
        raise ValidationError(f"t must be a positive integer, got {t}")
    product = op1.values @ op2.values
    return IntegratedOperator(
        values=stochastic_matrix_power(product, int(t)),
        exponents=(int(t), int(t)),
        strategy=FusionStrategy.ALTERNATING,
        order=(1, 2),
    )


def reduce_exponents(k1: int, k2: int) -> Tuple[int, int]:
    """Coprime exponent pair preserving the elbow ratio: (k1, k2) / gcd."""
    if k1 < 1 or k2 < 1:
        raise ValidationError(f"elbow timescales must be positive, got ({k1}, {k2})")
    g = math.gcd(int(k1), int(k2))
    return int(k1) // g, int(k2) // g


def _powered_product(
    op1: DiffusionOperator,
    op2: DiffusionOperator,
    exponents: Tuple[int, int],
    order: Tuple[int, int],
) -> np.ndarray:
    powered = {
        1: stochastic_matrix_power(op1.values, exponents[0]),
        2: stochastic_matrix_power(op2.values, exponents[1]),
    }
    return powered[order[0]] @ powered[order[1]]


def integrated(data1, data2, cfg: Optional[FusionConfig] = None) -> IntegratedOperator:
    """Full integrated-diffusion pipeline.

    1. Multiscale-denoise each modality.
    2. Build the per-modality diffusion operators from the denoised data.
    3. Pick each operator's elbow timescale from its spectral-entropy curve.
    4. Reduce the elbow pair by its gcd to coprime exponents (t1, t2).
    5. Multiply the operators raised to those exponents (first factor per
       ``cfg.order``).

    Returns the fused operator with exponents, elbows, bandwidths and
    entropy curves recorded.
    """
    cfg = cfg or FusionConfig()
    data1, data2 = as_data_matrix(data1), as_data_matrix(data2)
    _check_aligned(data1, data2)
    den1 = mgd(data1, cfg.mgd, cfg.kernel)
    den2 = mgd(data2, cfg.mgd, cfg.kernel)
    k1 = kernel_from_config(den1, cfg.kernel)
    k2 = kernel_from_config(den2, cfg.kernel)
    op1, op2 = diffusion_operator(k1), diffusion_operator(k2)
    curve1 = select_timescale(eigendecompose(op1), cfg.t_max)
    curve2 = select_timescale(eigendecompose(op2), cfg.t_max)
    elbows = (curve1.elbow, curve2.elbow)
    exponents = reduce_exponents(*elbows)
    return IntegratedOperator(
        values=_powered_product(op1, op2, exponents, cfg.order),
        exponents=exponents,
        strategy=FusionStrategy.INTEGRATED,
        source_elbows=elbows,
        order=cfg.order,
        details={
            "bandwidths": [k1.bandwidth, k2.bandwidth],
            "entropy_curves": [curve1, curve2],
        },
    )


def _zscore(values: np.ndarray) -> np.ndarray:
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    std[std == 0.0] = 1.0  # constant features contribute zeros
    return (values - mean) / std


def _kernel_from_sq_dists(d2: np.ndarray, cfg: KernelConfig) -> Kernel:
    if isinstance(cfg.bandwidth, str):
        if cfg.bandwidth != MEDIAN_HEURISTIC:
            raise ValidationError(f"unknown bandwidth policy {cfg.bandwidth!r}")
        eps = median_bandwidth(d2, cfg.knn_k)
    else:
        eps = float(cfg.bandwidth)
        if eps <= 0.0:
            raise ValidationError(f"bandwidth must be positive, got {eps}")
    return Kernel(np.exp(-d2 / eps), eps)


def fuse_baseline(data1, data2, strategy, cfg: Optional[FusionConfig] = None) -> IntegratedOperator:
    """Build one of the comparison operators.

    concatenation: z-score each modality's features, concatenate columns,
    then the standard kernel/operator construction. distance_sum: kernel
    on the summed squared distances of the two modalities. affinity_sum:
    row-normalized (K1 + K2) / 2. affinity_product: row-normalized
    elementwise K1 * K2. alternating: (P1 P2)^t with t =
    ``cfg.alternating_steps``. alternating_local: multiscale-denoise
    first, then alternating. alternating_powered: elbow-derived coprime
    exponents without denoising.
    """
    cfg = cfg or FusionConfig()
    if isinstance(strategy, str):
        strategy = FusionStrategy.from_string(strategy)
    data1, data2 = as_data_matrix(data1), as_data_matrix(data2)
    _check_aligned(data1, data2)

    if strategy == FusionStrategy.INTEGRATED:
        return integrated(data1, data2, cfg)

    if strategy == FusionStrategy.CONCATENATION:
        stacked = np.hstack([_zscore(data1.values), _zscore(data2.values)])
        kern = kernel_from_config(DataMatrix(stacked, data1.row_ids), cfg.kernel)
        op = diffusion_operator(kern)
        return IntegratedOperator(
            values=op.values,
            exponents=(1, 1),
            strategy=strategy,
            details={"bandwidths": [kern.bandwidth]},
        )

    if strategy == FusionStrategy.DISTANCE_SUM:
        d2 = pairwise_sq_dists(data1.values) + pairwise_sq_dists(data2.values)
        kern = _kernel_from_sq_dists(d2, cfg.kernel)
        op = diffusion_operator(kern)
        return IntegratedOperator(
            values=op.values,
            exponents=(1, 1),
            strategy=strategy,
            details={"bandwidths": [kern.bandwidth]},
        )

    if strategy in (FusionStrategy.AFFINITY_SUM, FusionStrategy.AFFINITY_PRODUCT):
        k1 = kernel_from_config(data1, cfg.kernel)
        k2 = kernel_from_config(data2, cfg.kernel)
        if strategy == FusionStrategy.AFFINITY_SUM:
            combined = (k1.values + k2.values) / 2.0
        else:
            combined = k1.values * k2.values
        op = diffusion_operator(Kernel(combined, 0.0))
        return IntegratedOperator(
            values=op.values,
            exponents=(1, 1),
            strategy=strategy,
            details={"bandwidths": [k1.bandwidth, k2.bandwidth]},
        )

    if strategy in (
        FusionStrategy.ALTERNATING,
        FusionStrategy.ALTERNATING_LOCAL,
        FusionStrategy.ALTERNATING_POWERED,
    ):
        if strategy == FusionStrategy.ALTERNATING_LOCAL:
            data1 = mgd(data1, cfg.mgd, cfg.kernel)
            data2 = mgd(data2, cfg.mgd, cfg.kernel)
        k1 = kernel_from_config(data1, cfg.kernel)
        k2 = kernel_from_config(data2, cfg.kernel)
        op1, op2 = diffusion_operator(k1), diffusion_operator(k2)
        details: dict = {"bandwidths": [k1.bandwidth, k2.bandwidth]}
        if strategy == FusionStrategy.ALTERNATING_POWERED:
            curve1 = select_timescale(eigendecompose(op1), cfg.t_max)
            curve2 = select_timescale(eigendecompose(op2), cfg.t_max)
            elbows = (curve1.elbow, curve2.elbow)
            exponents = reduce_exponents(*elbows)
            details["entropy_curves"] = [curve1, curve2]
            return IntegratedOperator(
                values=_powered_product(op1, op2, exponents, cfg.order),
                exponents=exponents,
                strategy=strategy,
                source_elbows=elbows,
                order=cfg.order,
                details=details,
            )
        first, second = (op1, op2) if cfg.order == (1, 2) else (op2, op1)
        return IntegratedOperator(
            values=stochastic_matrix_power(first.values @ second.values, cfg.alternating_steps),
            exponents=(cfg.alternating_steps, cfg.alternating_steps),
            strategy=strategy,
            order=cfg.order,
            details=details,
        )

    raise ValidationError(f"unhandled strategy {strategy}")


def fuse(data1, data2, strategy, cfg: Optional[FusionConfig] = None) -> IntegratedOperator:
    """Dispatch to ``integrated`` or ``fuse_baseline`` by strategy tag."""
    if isinstance(strategy, str):
        strategy = FusionStrategy.from_string(strategy)
    if strategy == FusionStrategy.INTEGRATED:
        return integrated(data1, data2, cfg)
    return fuse_baseline(data1, data2, strategy, cfg)


def save_operator(op: IntegratedOperator, path_base) -> Tuple[Path, Path]:
    """Write the fused matrix and a JSON sidecar describing its provenance.

    ``path_base`` gets ``.bin`` (little-endian f64 matrix with (N, N)
    header) and ``.json`` extensions. Returns both paths.
    """
    from .datasets import save_matrix  # local import to avoid a cycle

    base = Path(path_base)
    bin_path = base.with_suffix(".bin")
    json_path = base.with_suffix(".json")
    save_matrix(bin_path, op.values)
    sidecar = {
        "strategy": op.strategy.value,
        "exponents": list(op.exponents),
        "source_elbows": list(op.source_elbows) if op.source_elbows else None,
        "order": list(op.order),
        "n": op.n,
        "bandwidths": op.details.get("bandwidths"),
        "seeds": op.details.get("seeds"),
    }
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return bin_path, json_path


def load_operator(path_base) -> IntegratedOperator:
    """Read back an operator written by ``save_operator``."""
    from .datasets import load_matrix

    base = Path(path_base)
    values = load_matrix(base.with_suffix(".bin"))
    meta = json.loads(base.with_suffix(".json").read_text())
    return IntegratedOperator(
        values=values,
        exponents=tuple(meta["exponents"]),
        strategy=FusionStrategy.from_string(meta["strategy"]),
        source_elbows=tuple(meta["source_elbows"]) if meta.get("source_elbows") else None,
        order=tuple(meta.get("order", (1, 2))),
        details={"bandwidths": meta.get("bandwidths")},
    )
