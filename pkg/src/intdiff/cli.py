"""Command-line orchestration of the pipeline.

Each command reads an optional JSON config file, applies flag overrides
(flags win), writes the fully-resolved config next to its outputs, and
exits 0 on success, 1 on numerical failure, 2 on usage/config errors,
3 on IO/parse errors. Identical resolved config and seed reproduce
byte-identical CSV/JSON outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import benchmarks
from .datasets import (
    CoupledSpec,
    TreeSpec,
    load_csv,
    load_digits_subset,
    load_idx,
    load_matrix,
    make_coupled_features,
    make_noisy_pair,
    make_tree,
    save_csv,
    save_matrix,
)
from .denoise import MgdConfig, MgdTelemetry, mgd
from .embedding import diffusion_map, scatter_2d
from .errors import IntdiffError, NumericalError, ParseError, ValidationError
from .evaluation import EvalReport, demap, knn_accuracy, mutual_information
from .fusion import FusionConfig, FusionStrategy, fuse, load_operator, save_operator
from .operators import DataMatrix, KernelConfig, diffusion_operator, kernel_from_config
from .spectral import eigendecompose, select_timescale


def _load_table(path) -> DataMatrix:
    path = Path(path)
    if path.suffix == ".bin":
        return DataMatrix.from_array(load_matrix(path))
    if path.suffix in (".idx", ".idx3-ubyte", ".idx1-ubyte"):
        return load_idx(path)
    return load_csv(path)


def _load_labels(path) -> np.ndarray:
    return _load_table(path).values[:, 0].astype(np.int64)


def _resolve(defaults: dict, args) -> dict:
    file_cfg = {}
    if getattr(args, "config", None):
        file_cfg = json.loads(Path(args.config).read_text())
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    resolved = dict(defaults)
    resolved.update(file_cfg)
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        if key not in defaults:
            raise ValidationError(f"unknown config key {key!r}")
        try:
            resolved[key] = json.loads(raw)
        except json.JSONDecodeError:
            resolved[key] = raw
    for key in defaults:
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
    return resolved


def _prepare_out(cfg: dict) -> Path:
    if not cfg.get("out"):
        raise ValidationError("an output directory is required (config key 'out' or --out)")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    return out


def _kernel_config(cfg: dict) -> KernelConfig:
    bandwidth = cfg["bandwidth"]
    if isinstance(bandwidth, str) and bandwidth not in ("median-heuristic",):
        bandwidth = float(bandwidth)
    return KernelConfig(bandwidth=bandwidth, knn_k=int(cfg["knn_k"]))


def _fusion_config(cfg: dict) -> FusionConfig:
    return FusionConfig(
        kernel=_kernel_config(cfg),
        mgd=MgdConfig(
            t=int(cfg["mgd_t"]),
            tau=int(cfg["mgd_tau"]),
            c=int(cfg["mgd_c"]),
            max_depth=int(cfg["mgd_max_depth"]),
        ),
        alternating_steps=int(cfg["alternating_steps"]),
        t_max=int(cfg["t_max"]),
        order=tuple(cfg["order"]),
    )


_COMMON_PIPELINE = {
    "bandwidth": "median-heuristic",
    "knn_k": 5,
    "mgd_t": 3,
    "mgd_tau": 16,
    "mgd_c": 2,
    "mgd_max_depth": 4,
    "alternating_steps": 1,
    "t_max": 64,
    "order": [1, 2],
}


# -- generate ---------------------------------------------------------------

GENERATE_DEFAULTS = {
    "generator": "tree",
    "seed": 0,
    "out": None,
    "branches": 5,
    "points_per_branch": 100,
    "ambient_dim": 60,
    "branch_noise": None,
    "n_points": 1000,
    "nu1": 1.0,
    "nu2": 3.0,
    "n_pairs": 20,
    "n_extra": 60,
    "n_clusters": 4,
    "jitter": [0.3, 1.5],
    "dropout": 0.7,
}


def cmd_generate(args) -> int:
    cfg = _resolve(GENERATE_DEFAULTS, args)
    out = _prepare_out(cfg)
    seed = int(cfg["seed"])
    generator = cfg["generator"]
    if generator == "tree":
        noise = cfg["branch_noise"] or [0.0] * int(cfg["branches"])
        mmset = make_tree(
            TreeSpec(
                branches=int(cfg["branches"]),
                points_per_branch=int(cfg["points_per_branch"]),
                ambient_dim=int(cfg["ambient_dim"]),
                branch_noise=tuple(float(x) for x in noise),
                seed=seed,
            )
        )
    elif generator == "noisy_digits":
        data, labels = load_digits_subset(int(cfg["n_points"]), seed)
        mmset = make_noisy_pair(data, float(cfg["nu1"]), float(cfg["nu2"]), seed, labels)
    elif generator == "coupled":
        jitter = cfg["jitter"]
        mmset = make_coupled_features(
            CoupledSpec(
                n_points=int(cfg["n_points"]),
                n_pairs=int(cfg["n_pairs"]),
                n_extra=int(cfg["n_extra"]),
                n_clusters=int(cfg["n_clusters"]),
                jitter=tuple(jitter) if isinstance(jitter, list) else float(jitter),
                dropout=float(cfg["dropout"]),
                seed=seed,
            )
        )
    else:
        raise ValidationError(f"unknown generator {generator!r}")
    save_matrix(out / "modality1.bin", mmset.modality1.values)
    save_matrix(out / "modality2.bin", mmset.modality2.values)
    save_csv(out / "labels.csv", mmset.labels[:, None].astype(float), header=["label"])
    if mmset.ground_truth is not None:
        save_matrix(out / "ground_truth.bin", mmset.ground_truth.values)
    if mmset.geodesics is not None:
        save_matrix(out / "geodesics.bin", mmset.geodesics)
    return 0


# -- mgd --------------------------------------------------------------------

MGD_DEFAULTS = {
    "input": None,
    "out": None,
    "bandwidth": "median-heuristic",
    "knn_k": 5,
    "mgd_t": 3,
    "mgd_tau": 16,
    "mgd_c": 2,
    "mgd_max_depth": 4,
}


def cmd_mgd(args) -> int:
    cfg = _resolve(MGD_DEFAULTS, args)
    if not cfg["input"]:
        raise ValidationError("mgd needs an input matrix (config key 'input' or --input)")
    out = _prepare_out(cfg)
    data = _load_table(cfg["input"])
    telemetry = MgdTelemetry()
    denoised = mgd(
        data,
        MgdConfig(
            t=int(cfg["mgd_t"]),
            tau=int(cfg["mgd_tau"]),
            c=int(cfg["mgd_c"]),
            max_depth=int(cfg["mgd_max_depth"]),
        ),
        _kernel_config(cfg),
        telemetry,
    )
    save_matrix(out / "denoised.bin", denoised.values)
    report = {
        "level_correction_norms": telemetry.level_norms(),
        "degenerate_stops": telemetry.degenerate_stops,
        "n_points": denoised.n_rows,
    }
    (out / "mgd_report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


# -- entropy ----------------------------------------------------------------

ENTROPY_DEFAULTS = {
    "input": None,
    "out": None,
    "bandwidth": "median-heuristic",
    "knn_k": 5,
    "t_max": 64,
}


def cmd_entropy(args) -> int:
    cfg = _resolve(ENTROPY_DEFAULTS, args)
    if not cfg["input"]:
        raise ValidationError("entropy needs an input matrix (config key 'input' or --input)")
    out = _prepare_out(cfg)
    data = _load_table(cfg["input"])
    op = diffusion_operator(kernel_from_config(data, _kernel_config(cfg)))
    curve = select_timescale(eigendecompose(op), int(cfg["t_max"]))
    (out / "entropy.csv").write_text(curve.to_csv())
    return 0


# -- fuse ---------------------------------------------------------------------

FUSE_DEFAULTS = {
    "input1": None,
    "input2": None,
    "strategy": "integrated",
    "seed": 0,
    "out": None,
    **_COMMON_PIPELINE,
}


def cmd_fuse(args) -> int:
    cfg = _resolve(FUSE_DEFAULTS, args)
    if not cfg["input1"] or not cfg["input2"]:
        raise ValidationError("fuse needs input1 and input2 matrices")
    strategy = FusionStrategy.from_string(str(cfg["strategy"]))
    out = _prepare_out(cfg)
    data1, data2 = _load_table(cfg["input1"]), _load_table(cfg["input2"])
    fused = fuse(data1, data2, strategy, _fusion_config(cfg))
    fused.details["seeds"] = {"run": int(cfg["seed"]), "clustering": "content-derived"}
    save_operator(fused, out / "operator")
    for which, curve in enumerate(fused.details.get("entropy_curves", []), start=1):
        (out / f"entropy_modality{which}.csv").write_text(curve.to_csv())
    return 0


# -- denoise ------------------------------------------------------------------

DENOISE_DEFAULTS = {
    "operator": None,
    "input": None,
    "steps": 1,
    "out": None,
}


def cmd_denoise(args) -> int:
    cfg = _resolve(DENOISE_DEFAULTS, args)
    if not cfg["operator"] or not cfg["input"]:
        raise ValidationError("denoise needs an operator base path and an input matrix")
    out = _prepare_out(cfg)
    fused = load_operator(cfg["operator"])
    data = _load_table(cfg["input"])
    if data.n_rows != fused.n:
        raise ValidationError(f"data has {data.n_rows} rows, operator expects {fused.n}")
    values = data.values
    for _ in range(int(cfg["steps"])):
        values = fused.values @ values
    save_matrix(out / "denoised.bin", values)
    return 0


# -- embed --------------------------------------------------------------------

EMBED_DEFAULTS = {
    "operator": None,
    "m": 20,
    "t": 1,
    "method": "general",
    "labels": None,
    "out": None,
}


def cmd_embed(args) -> int:
    cfg = _resolve(EMBED_DEFAULTS, args)
    if not cfg["operator"]:
        raise ValidationError("embed needs an operator base path")
    out = _prepare_out(cfg)
    fused = load_operator(cfg["operator"])
    emb = diffusion_map(fused, m=int(cfg["m"]), t=int(cfg["t"]), method=str(cfg["method"]))
    (out / "embedding.csv").write_text(emb.to_csv())
    labels = _load_labels(cfg["labels"]) if cfg["labels"] else None
    if emb.n_components >= 2:
        (out / "embedding.svg").write_text(scatter_2d(emb, labels))
    return 0


# -- eval ---------------------------------------------------------------------

EVAL_DEFAULTS = {
    "metric": "knn",
    "embedding": None,
    "labels": None,
    "geodesics": None,
    "input1": None,
    "input2": None,
    "column1": 0,
    "column2": 0,
    "k": 5,
    "bins": 8,
    "seed": 0,
    "out": None,
}


def _load_embedding_coords(path) -> np.ndarray:
    table = _load_table(path)
    if Path(path).suffix == ".csv":
        return table.values[:, 1:]  # first column is row_id
    return table.values


def cmd_eval(args) -> int:
    cfg = _resolve(EVAL_DEFAULTS, args)
    out = _prepare_out(cfg)
    metric = cfg["metric"]
    if metric == "knn":
        if not cfg["embedding"] or not cfg["labels"]:
            raise ValidationError("knn evaluation needs 'embedding' and 'labels'")
        coords = _load_embedding_coords(cfg["embedding"])
        labels = _load_labels(cfg["labels"])
        value = knn_accuracy(coords, labels, k=int(cfg["k"]), seed=int(cfg["seed"]))
        report = EvalReport("knn_accuracy", value, cfg, len(labels))
    elif metric == "demap":
        if not cfg["embedding"] or not cfg["geodesics"]:
            raise ValidationError("demap evaluation needs 'embedding' and 'geodesics'")
        coords = _load_embedding_coords(cfg["embedding"])
        geo = load_matrix(cfg["geodesics"])
        value = demap(coords, geo)
        report = EvalReport("demap", value, cfg, coords.shape[0])
    elif metric == "mi":
        if not cfg["input1"] or not cfg["input2"]:
            raise ValidationError("mi evaluation needs 'input1' and 'input2'")
        a = _load_table(cfg["input1"]).values[:, int(cfg["column1"])]
        b = _load_table(cfg["input2"]).values[:, int(cfg["column2"])]
        value = mutual_information(a, b, bins=int(cfg["bins"]))
        report = EvalReport("mutual_information", value, cfg, len(a))
    else:
        raise ValidationError(f"unknown metric {metric!r}; expected knn, demap or mi")
    (out / "report.json").write_text(report.to_json() + "\n")
    return 0


# -- benchmark ----------------------------------------------------------------

BENCHMARK_DEFAULTS = {
    "protocols": [
        benchmarks.PROTOCOL_GLOBAL,
        benchmarks.PROTOCOL_TREE,
        benchmarks.PROTOCOL_DENOISE,
        benchmarks.PROTOCOL_MI,
    ],
    "strategies": list(benchmarks.EMBED_STRATEGIES),
    "denoise_strategies": ["integrated", "alternating_powered", "alternating"],
    "mi_strategies": ["none", "modality_specific", "alternating", "integrated"],
    "n_seeds": 5,
    "seed": 0,
    "workers": 1,
    "embed_m": 20,
    "eval_knn_k": 5,
    "digits_n_points": 1000,
    "digits_pixel_scale": 2.0,
    "digits_nu1": 1.0,
    "digits_nu2_values": list(range(0, 9)),
    "denoise_nu2_values": list(range(0, 9)),
    "tree_nu_values": list(range(0, 6)),
    "tree_branches": 5,
    "tree_points_per_branch": 100,
    "tree_ambient_dim": 60,
    "tree_base_noise": 0.02,
    "mi_dropout_values": [0.7],
    "mi_n_points": 1200,
    "mi_n_pairs": 20,
    "mi_n_extra": 60,
    "mi_n_clusters": 4,
    "mi_jitter": [0.3, 1.5],
    "mi_bins": 8,
    "out": None,
    **_COMMON_PIPELINE,
    "knn_k": 3,
    "mgd_t": 1,
}


def cmd_benchmark(args) -> int:
    cfg = _resolve(BENCHMARK_DEFAULTS, args)
    out = _prepare_out(cfg)
    fusion_cfg = _fusion_config(cfg)
    root = int(cfg["seed"])
    workers = int(cfg["workers"])
    rows = []
    if benchmarks.PROTOCOL_GLOBAL in cfg["protocols"]:
        rows += benchmarks.run_global_noise_digits(
            strategies=cfg["strategies"],
            nu2_values=cfg["digits_nu2_values"],
            n_points=int(cfg["digits_n_points"]),
            pixel_scale=float(cfg["digits_pixel_scale"]),
            nu1=float(cfg["digits_nu1"]),
            n_seeds=int(cfg["n_seeds"]),
            root_seed=root,
            cfg=fusion_cfg,
            m=int(cfg["embed_m"]),
            knn_k=int(cfg["eval_knn_k"]),
            workers=workers,
        )
    if benchmarks.PROTOCOL_TREE in cfg["protocols"]:
        rows += benchmarks.run_tree_local_noise(
            strategies=cfg["strategies"],
            nu_values=cfg["tree_nu_values"],
            branches=int(cfg["tree_branches"]),
            points_per_branch=int(cfg["tree_points_per_branch"]),
            ambient_dim=int(cfg["tree_ambient_dim"]),
            base_noise=float(cfg["tree_base_noise"]),
            n_seeds=int(cfg["n_seeds"]),
            root_seed=root,
            cfg=fusion_cfg,
            m=int(cfg["embed_m"]),
            workers=workers,
        )
    if benchmarks.PROTOCOL_DENOISE in cfg["protocols"]:
        rows += benchmarks.run_denoised_digits(
            strategies=cfg["denoise_strategies"],
            nu2_values=cfg["denoise_nu2_values"],
            n_points=int(cfg["digits_n_points"]),
            pixel_scale=float(cfg["digits_pixel_scale"]),
            nu1=float(cfg["digits_nu1"]),
            n_seeds=int(cfg["n_seeds"]),
            root_seed=root,
            cfg=fusion_cfg,
            knn_k=int(cfg["eval_knn_k"]),
            workers=workers,
        )
    if benchmarks.PROTOCOL_MI in cfg["protocols"]:
        rows += benchmarks.run_mi_recovery(
            strategies=cfg["mi_strategies"],
            dropout_values=cfg["mi_dropout_values"],
            n_points=int(cfg["mi_n_points"]),
            n_pairs=int(cfg["mi_n_pairs"]),
            n_extra=int(cfg["mi_n_extra"]),
            n_clusters=int(cfg["mi_n_clusters"]),
            jitter=cfg["mi_jitter"],
            n_seeds=int(cfg["n_seeds"]),
            root_seed=root,
            cfg=fusion_cfg,
            bins=int(cfg["mi_bins"]),
            workers=workers,
        )
    (out / "benchmark.csv").write_text(benchmarks.rows_to_csv(rows))
    for protocol in cfg["protocols"]:
        if any(r["protocol"] == protocol for r in rows):
            (out / f"{protocol}.svg").write_text(benchmarks.protocol_plot(rows, protocol))
    return 0


# -- parser -------------------------------------------------------------------


def _add_common(sub, defaults):
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override a single config key (repeatable; flags win over file)")
    sub.add_argument("--out", help="output directory")
    if "seed" in defaults:
        sub.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="intdiff",
        description="Integrated diffusion: generate, denoise, fuse, embed and evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic multimodal dataset")
    _add_common(p, GENERATE_DEFAULTS)
    p.add_argument("--generator", choices=["tree", "noisy_digits", "coupled"])
    p.set_defaults(func=cmd_generate, defaults=GENERATE_DEFAULTS)

    p = sub.add_parser("mgd", help="multiscale graph denoising of one matrix")
    _add_common(p, MGD_DEFAULTS)
    p.add_argument("--input")
    p.set_defaults(func=cmd_mgd, defaults=MGD_DEFAULTS)

    p = sub.add_parser("entropy", help="spectral-entropy curve and elbow of one matrix")
    _add_common(p, ENTROPY_DEFAULTS)
    p.add_argument("--input")
    p.set_defaults(func=cmd_entropy, defaults=ENTROPY_DEFAULTS)

    p = sub.add_parser("fuse", help="build a fused operator from two matrices")
    _add_common(p, FUSE_DEFAULTS)
    p.add_argument("--input1")
    p.add_argument("--input2")
    p.add_argument("--strategy")
    p.set_defaults(func=cmd_fuse, defaults=FUSE_DEFAULTS)

    p = sub.add_parser("denoise", help="apply a saved operator to a matrix")
    _add_common(p, DENOISE_DEFAULTS)
    p.add_argument("--operator")
    p.add_argument("--input")
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_denoise, defaults=DENOISE_DEFAULTS)

    p = sub.add_parser("embed", help="diffusion-map embedding of a saved operator")
    _add_common(p, EMBED_DEFAULTS)
    p.add_argument("--operator")
    p.add_argument("--labels")
    p.add_argument("--m", type=int)
    p.add_argument("--t", type=int)
    p.set_defaults(func=cmd_embed, defaults=EMBED_DEFAULTS)

    p = sub.add_parser("eval", help="score an embedding or feature pair")
    _add_common(p, EVAL_DEFAULTS)
    p.add_argument("--metric", choices=["knn", "demap", "mi"])
    p.add_argument("--embedding")
    p.add_argument("--labels")
    p.add_argument("--geodesics")
    p.set_defaults(func=cmd_eval, defaults=EVAL_DEFAULTS)

    p = sub.add_parser("benchmark", help="run the benchmark protocols and write a tidy CSV")
    _add_common(p, BENCHMARK_DEFAULTS)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_benchmark, defaults=BENCHMARK_DEFAULTS)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except IntdiffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
