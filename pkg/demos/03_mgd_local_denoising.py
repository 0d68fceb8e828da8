"""Multiscale graph denoising on a branching tree with one noisy branch.

Local noise hits a single branch; the recursive denoiser builds
operators at progressively finer cluster scales, so the noisy branch is
corrected without disturbing the clean ones.

Run:  python demos/03_mgd_local_denoising.py
"""

from pathlib import Path

import numpy as np

import intdiff as idf

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

spec = idf.TreeSpec(branches=4, points_per_branch=60, ambient_dim=30,
                    branch_noise=(0.0, 0.0, 0.0, 0.0), seed=11)
clean = idf.make_tree(spec).modality1.values
labels = np.repeat(np.arange(4), 60)

rng = np.random.default_rng(12)
noisy = clean + np.where((labels == 3)[:, None], rng.normal(scale=0.03, size=clean.shape), 0.0)
noisy = noisy + rng.normal(scale=0.01, size=clean.shape)

telemetry = idf.MgdTelemetry()
denoised = idf.mgd(
    idf.DataMatrix.from_array(noisy),
    idf.MgdConfig(t=3, tau=20, c=2, max_depth=4),
    telemetry=telemetry,
)

print("per-branch MSE to the clean tree (before -> after):")
for b in range(4):
    sel = labels == b
    before = ((noisy[sel] - clean[sel]) ** 2).mean()
    after = ((denoised.values[sel] - clean[sel]) ** 2).mean()
    tag = "noisy" if b == 3 else "clean"
    print(f"  branch {b} ({tag}): {before:.5f} -> {after:.5f}  ({after / before:.2f}x)")

print("correction norm per recursion level:", {
    depth: round(norm, 3) for depth, norm in telemetry.level_norms().items()
})
print("degenerate cluster stops:", telemetry.degenerate_stops)
