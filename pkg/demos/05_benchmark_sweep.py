"""A small benchmark sweep producing the tidy CSV and trend plots.

Runs the tree local-noise protocol (DeMAP vs branch noise) and the
association-recovery protocol at reduced size, then writes the combined
CSV plus one SVG line plot per protocol. The full-size sweeps are
available through ``intdiff benchmark``.

Run:  python demos/05_benchmark_sweep.py
"""

from pathlib import Path

from intdiff import benchmarks

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

rows = benchmarks.run_tree_local_noise(
    strategies=("integrated", "alternating_local", "alternating_powered", "alternating"),
    nu_values=(0.0, 2.0, 4.0),
    points_per_branch=60,
    n_seeds=2,
    root_seed=0,
)
rows += benchmarks.run_mi_recovery(
    strategies=("none", "modality_specific", "alternating", "integrated"),
    n_points=800,
    n_seeds=2,
    root_seed=0,
)

(OUT / "benchmark.csv").write_text(benchmarks.rows_to_csv(rows))
for protocol in (benchmarks.PROTOCOL_TREE, benchmarks.PROTOCOL_MI):
    (OUT / f"{protocol}.svg").write_text(benchmarks.protocol_plot(rows, protocol))

print(f"wrote {OUT / 'benchmark.csv'} ({len(rows)} rows) and two SVG plots")
for protocol in (benchmarks.PROTOCOL_TREE, benchmarks.PROTOCOL_MI):
    selected = [r for r in rows if r["protocol"] == protocol]
    top = sorted({r["noise"] for r in selected})[-1]
    means = benchmarks.mean_by_strategy(selected, noise=top)
    print(f"{protocol} at noise {top}:", {k: round(v, 3) for k, v in means.items()})
