"""Desk-scale benchmark protocols over the fusion strategies.

Four protocols, each producing tidy rows (protocol, strategy, noise,
seed, metric, value):

* global-noise digits: both modalities are noisy copies of a digit
  subset (fixed nu1, sweeping nu2); score = kNN digit accuracy in the
  fused embedding.
* tree local noise: a branching tree with one increasingly noisy
  branch; score = DeMAP against the exact tree geodesics.
* denoised digits: the noisier digit modality is filtered by the fused
  operator; score = kNN accuracy on the denoised pixels.
* association recovery: dropout-sparsified coupled features; score =
  mean planted-pair mutual information after denoising.

Every cell (replicate x noise level) derives its seeds from the root
seed, so a sweep's output is byte-reproducible and independent of
execution order; cells can run in a process pool.
"""

from __future__ import annotations

import io
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .datasets import CoupledSpec, TreeSpec, load_digits_subset, make_coupled_features, make_noisy_pair, make_tree
from .embedding import diffusion_map
from .evaluation import demap, knn_accuracy, mi_recovery_benchmark
from .fusion import FusionConfig, fuse
from .rng import child_seed

CSV_COLUMNS = ("protocol", "strategy", "noise", "seed", "metric", "value")

PROTOCOL_GLOBAL = "global_noise_knn"
PROTOCOL_TREE = "tree_local_demap"
PROTOCOL_DENOISE = "denoised_pixels_knn"
PROTOCOL_MI = "mi_recovery"

EMBED_STRATEGIES = (
    "integrated",
    "alternating",
    "alternating_local",
    "alternating_powered",
    "concatenation",
    "distance_sum",
    "affinity_sum",
    "affinity_product",
)


def _eval_cell(kind: str, params: dict) -> List[dict]:
    if kind == PROTOCOL_GLOBAL:
        return _global_cell(**params)
    if kind == PROTOCOL_TREE:
        return _tree_cell(**params)
    if kind == PROTOCOL_DENOISE:
        return _denoise_cell(**params)
    if kind == PROTOCOL_MI:
        return _mi_cell(**params)
    raise ValueError(f"unknown protocol cell {kind!r}")


def _run_cells(cells: Sequence[tuple], workers: int) -> List[dict]:
    if workers <= 1:
        results = [_eval_cell(kind, params) for kind, params in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_eval_cell, *zip(*cells)))
    rows = [row for cell_rows in results for row in cell_rows]
    rows.sort(key=lambda r: (r["protocol"], r["strategy"], r["noise"], r["seed"]))
    return rows


def _noisy_digit_pair(n_points, pixel_scale, nu1, nu2, rep, root_seed):
    data, labels = load_digits_subset(n_points, child_seed(root_seed, "digits", rep))
    scaled = data.with_values(data.values * pixel_scale)
    pair = make_noisy_pair(scaled, nu1, nu2, child_seed(root_seed, "noise", rep, nu2), labels)
    return pair, labels


def _global_cell(strategies, n_points, pixel_scale, nu1, nu2, rep, root_seed, cfg, m, knn_k):
    pair, labels = _noisy_digit_pair(n_points, pixel_scale, nu1, nu2, rep, root_seed)
    rows = []
    for strategy in strategies:
        fused = fuse(pair.modality1, pair.modality2, strategy, cfg)
        emb = diffusion_map(fused, m=m)
        acc = knn_accuracy(emb, labels, k=knn_k, seed=child_seed(root_seed, "split", rep, nu2))
        rows.append(_row(PROTOCOL_GLOBAL, strategy, nu2, rep, "knn_accuracy", acc))
    return rows


def default_fusion_config() -> FusionConfig:
    """Benchmark-calibrated pipeline settings (desk scale).

    A tight kernel (3rd-neighbor median bandwidth) and a gentle local
    denoising step keep the per-modality operators structured at the
    noise levels the protocols sweep.
    """
    from .denoise import MgdConfig
    from .operators import KernelConfig

    return FusionConfig(kernel=KernelConfig(knn_k=3), mgd=MgdConfig(t=1))


def run_global_noise_digits(
    strategies: Iterable[str] = EMBED_STRATEGIES,
    nu2_values: Sequence[float] = tuple(range(0, 9)),
    n_points: int = 1000,
    pixel_scale: float = 2.0,
    nu1: float = 1.0,
    n_seeds: int = 5,
    root_seed: int = 0,
    cfg: Optional[FusionConfig] = None,
    m: int = 20,
    knn_k: int = 5,
    workers: int = 1,
) -> List[dict]:
    """Digit-classification sweep with increasing global-noise imbalance.

    Pixels are rescaled to [0, pixel_scale] before noising so the nu
    grid spans mild to overwhelming corruption.
    """
    cfg = cfg or default_fusion_config()
    cells = [
        (
            PROTOCOL_GLOBAL,
            dict(
                strategies=tuple(strategies), n_points=n_points, pixel_scale=pixel_scale,
                nu1=nu1, nu2=nu2, rep=rep, root_seed=root_seed, cfg=cfg, m=m, knn_k=knn_k,
            ),
        )
        for nu2 in nu2_values
        for rep in range(n_seeds)
    ]
    return _run_cells(cells, workers)


def _tree_cell(strategies, branches, points_per_branch, ambient_dim, base_noise, branch_nu, rep, root_seed, cfg, m):
    # nu counts displacement in branch-length units; per-coordinate
    # sigma is nu / sqrt(dim) so a level-1 branch is displaced by ~1
    noise = [base_noise] * branches
    noise[-1] = base_noise + branch_nu / np.sqrt(ambient_dim)
    spec = TreeSpec(
        branches=branches,
        points_per_branch=points_per_branch,
        ambient_dim=ambient_dim,
        branch_noise=tuple(noise),
        seed=child_seed(root_seed, "tree", rep, branch_nu),
    )
    mmset = make_tree(spec)
    rows = []
    for strategy in strategies:
        fused = fuse(mmset.modality1, mmset.modality2, strategy, cfg)
        emb = diffusion_map(fused, m=m)
        rho = demap(emb, mmset.geodesics)
        rows.append(_row(PROTOCOL_TREE, strategy, branch_nu, rep, "demap", rho))
    return rows


def run_tree_local_noise(
    strategies: Iterable[str] = EMBED_STRATEGIES,
    nu_values: Sequence[float] = tuple(range(0, 6)),
    branches: int = 5,
    points_per_branch: int = 100,
    ambient_dim: int = 60,
    base_noise: float = 0.02,
    n_seeds: int = 5,
    root_seed: int = 0,
    cfg: Optional[FusionConfig] = None,
    m: int = 20,
    workers: int = 1,
) -> List[dict]:
    """DeMAP sweep on trees whose last branch gets increasing local noise."""
    cfg = cfg or default_fusion_config()
    cells = [
        (
            PROTOCOL_TREE,
            dict(
                strategies=tuple(strategies), branches=branches,
                points_per_branch=points_per_branch, ambient_dim=ambient_dim,
                base_noise=base_noise, branch_nu=nu, rep=rep,
                root_seed=root_seed, cfg=cfg, m=m,
            ),
        )
        for nu in nu_values
        for rep in range(n_seeds)
    ]
    return _run_cells(cells, workers)


def _denoise_cell(strategies, n_points, pixel_scale, nu1, nu2, rep, root_seed, cfg, knn_k):
    pair, labels = _noisy_digit_pair(n_points, pixel_scale, nu1, nu2, rep, root_seed)
    rows = []
    for strategy in strategies:
        fused = fuse(pair.modality1, pair.modality2, strategy, cfg)
        denoised = fused.values @ pair.modality2.values  # the noisier modality
        acc = knn_accuracy(denoised, labels, k=knn_k, seed=child_seed(root_seed, "split", rep, nu2))
        rows.append(_row(PROTOCOL_DENOISE, strategy, nu2, rep, "knn_accuracy", acc))
    return rows


def run_denoised_digits(
    strategies: Iterable[str] = ("integrated", "alternating_powered", "alternating"),
    nu2_values: Sequence[float] = tuple(range(0, 9)),
    n_points: int = 1000,
    pixel_scale: float = 2.0,
    nu1: float = 1.0,
    n_seeds: int = 5,
    root_seed: int = 0,
    cfg: Optional[FusionConfig] = None,
    knn_k: int = 5,
    workers: int = 1,
) -> List[dict]:
    """Pixel-denoising sweep: filter the noisier modality, classify pixels."""
    cfg = cfg or default_fusion_config()
    cells = [
        (
            PROTOCOL_DENOISE,
            dict(
                strategies=tuple(strategies), n_points=n_points, pixel_scale=pixel_scale,
                nu1=nu1, nu2=nu2, rep=rep, root_seed=root_seed, cfg=cfg, knn_k=knn_k,
            ),
        )
        for nu2 in nu2_values
        for rep in range(n_seeds)
    ]
    return _run_cells(cells, workers)


def _mi_cell(strategies, n_points, n_pairs, n_extra, n_clusters, jitter, dropout, rep, root_seed, cfg, bins):
    spec = CoupledSpec(
        n_points=n_points,
        n_pairs=n_pairs,
        n_extra=n_extra,
        n_clusters=n_clusters,
        jitter=tuple(jitter) if isinstance(jitter, (tuple, list)) else jitter,
        dropout=dropout,
        seed=child_seed(root_seed, "coupled", rep, dropout),
    )
    mmset = make_coupled_features(spec)
    report = mi_recovery_benchmark(mmset, strategies, cfg, bins=bins)
    return [
        _row(PROTOCOL_MI, strategy, dropout, rep, "mean_mutual_information",
             report.values[strategy]["mean"])
        for strategy in strategies
    ]


def run_mi_recovery(
    strategies: Iterable[str] = ("none", "modality_specific", "alternating", "integrated"),
    dropout_values: Sequence[float] = (0.7,),
    n_points: int = 1200,
    n_pairs: int = 20,
    n_extra: int = 60,
    n_clusters: int = 4,
    jitter=(0.3, 1.5),
    n_seeds: int = 5,
    root_seed: int = 0,
    cfg: Optional[FusionConfig] = None,
    bins: int = 8,
    workers: int = 1,
) -> List[dict]:
    """Cross-modality association recovery under dropout sparsification."""
    cfg = cfg or default_fusion_config()
    cells = [
        (
            PROTOCOL_MI,
            dict(
                strategies=tuple(strategies), n_points=n_points, n_pairs=n_pairs,
                n_extra=n_extra, n_clusters=n_clusters, jitter=jitter, dropout=dropout,
                rep=rep, root_seed=root_seed, cfg=cfg, bins=bins,
            ),
        )
        for dropout in dropout_values
        for rep in range(n_seeds)
    ]
    return _run_cells(cells, workers)


def _row(protocol, strategy, noise, seed, metric, value) -> dict:
    return {
        "protocol": protocol,
        "strategy": strategy,
        "noise": float(noise),
        "seed": int(seed),
        "metric": metric,
        "value": float(value),
    }


def rows_to_csv(rows: Sequence[dict]) -> str:
    """Tidy CSV with the fixed v1 column set."""
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        buf.write(
            f"{row['protocol']},{row['strategy']},{row['noise']!r},"
            f"{row['seed']},{row['metric']},{row['value']!r}\n"
        )
    return buf.getvalue()


def mean_by_strategy(rows: Sequence[dict], noise: Optional[float] = None) -> dict:
    """Mean value per strategy, optionally restricted to one noise level."""
    sums: dict = {}
    for row in rows:
        if noise is not None and row["noise"] != noise:
            continue
        sums.setdefault(row["strategy"], []).append(row["value"])
    return {strategy: float(np.mean(vals)) for strategy, vals in sums.items()}


def protocol_plot(rows: Sequence[dict], protocol: str) -> str:
    """SVG line plot (metric vs noise, one polyline per strategy)."""
    from .plots import svg_line_plot

    selected = [r for r in rows if r["protocol"] == protocol]
    strategies = sorted({r["strategy"] for r in selected})
    series = {}
    metric = selected[0]["metric"] if selected else "value"
    for strategy in strategies:
        noises = sorted({r["noise"] for r in selected if r["strategy"] == strategy})
        means = [
            np.mean([r["value"] for r in selected if r["strategy"] == strategy and r["noise"] == nu])
            for nu in noises
        ]
        series[strategy] = (noises, means)
    return svg_line_plot(series, title=protocol, x_label="noise", y_label=metric)
