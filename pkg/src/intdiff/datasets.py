"""Synthetic multimodal generators and dataset IO.

Generators are pure functions of their spec and seed: the same call is
bit-reproducible, and noise stages draw from independent child streams
so e.g. the clean part of a dataset is unchanged when only the dropout
rate differs. File formats: IDX (big-endian ubyte image/label files),
CSV, and a 16-byte-header little-endian float64 binary.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import ParseError, ValidationError
from .operators import DataMatrix
from .rng import rng_for

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class MultimodalSet:
    """Two aligned measurement modalities of one underlying system."""

    modality1: DataMatrix
    modality2: DataMatrix
    labels: np.ndarray
    ground_truth: Optional[DataMatrix] = None
    geodesics: Optional[np.ndarray] = None
    noise_spec: object = None
    seed: int = 0
    coupled_pairs: Optional[list] = None

    def __post_init__(self):
        n = self.modality1.n_rows
        self.labels = np.asarray(self.labels, dtype=np.int64)
        for name, other in (("modality2", self.modality2), ("ground_truth", self.ground_truth)):
            if other is not None and other.n_rows != n:
                raise ValidationError(f"{name} has {other.n_rows} rows, expected {n}")
        if self.labels.shape != (n,):
            raise ValidationError(f"labels shape {self.labels.shape}, expected ({n},)")
        for other in (self.modality2, self.ground_truth):
            if other is not None and not np.array_equal(other.row_ids, self.modality1.row_ids):
                raise ValidationError("all members must share row_ids")


def make_noisy_pair(base, nu1: float, nu2: float, seed: int, labels=None) -> MultimodalSet:
    """Corrupt one dataset into two modalities with i.i.d. Gaussian noise.

    modality_k = base + N(0, nu_k^2) elementwise, drawn independently per
    modality. Values are not clamped afterwards. ``ground_truth`` keeps
    the clean base.
    """
    if nu1 < 0 or nu2 < 0:
        raise ValidationError(f"noise levels must be >= 0, got ({nu1}, {nu2})")
    base = base if isinstance(base, DataMatrix) else DataMatrix.from_array(base)
    mods = []
    for which, nu in ((1, nu1), (2, nu2)):
        if nu == 0:
            mods.append(base.with_values(base.values.copy()))
        else:
            noise = rng_for(seed, "noisy-pair", which).normal(0.0, nu, size=base.values.shape)
            mods.append(base.with_values(base.values + noise))
    if labels is None:
        labels = np.zeros(base.n_rows, dtype=np.int64)
    return MultimodalSet(
        modality1=mods[0],
        modality2=mods[1],
        labels=labels,
        ground_truth=base,
        noise_spec=(float(nu1), float(nu2)),
        seed=seed,
    )


@dataclass(frozen=True)
class TreeSpec:
    """Branching-tree generator settings.

    Branch 0 is a unit segment from the origin along a random direction;
    each later branch starts at a uniformly chosen point of a random
    earlier branch and extends along a fresh random direction.
    ``branch_noise[b]`` is the Gaussian sigma applied per coordinate to
    branch b's points in each modality.
    """

    branches: int = 5
    points_per_branch: int = 100
    ambient_dim: int = 60
    branch_noise: Tuple[float, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.branches < 1:
            raise ValidationError(f"branches must be >= 1, got {self.branches}")
        if self.ambient_dim < 2:
            raise ValidationError(f"ambient_dim must be >= 2, got {self.ambient_dim}")
        if self.points_per_branch < 1:
            raise ValidationError("points_per_branch must be >= 1")
        noise = tuple(self.branch_noise) if self.branch_noise else (0.0,) * self.branches
        if len(noise) != self.branches:
            raise ValidationError(
                f"branch_noise has {len(noise)} entries for {self.branches} branches"
            )
        if any(nu < 0 for nu in noise):
            raise ValidationError("branch noise must be >= 0")
        object.__setattr__(self, "branch_noise", noise)


def _random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _random_orthogonal(rng: np.random.Generator, dim: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q * np.sign(np.diag(r))[None, :]


def make_tree(spec: TreeSpec) -> MultimodalSet:
    """Sample a branching tree and observe it through two noisy sensors.

    The two modalities are independent random orthogonal maps of the
    same noiseless tree, each with per-branch Gaussian noise added
    afterwards. ``ground_truth`` is the unrotated noiseless tree and
    ``geodesics`` its exact point-to-point path lengths along the tree.
    """
    rng = rng_for(spec.seed, "tree-structure")
    dim = spec.ambient_dim
    starts = np.zeros((spec.branches, dim))
    dirs = np.zeros((spec.branches, dim))
    parents = np.full(spec.branches, -1, dtype=np.int64)
    attach_pos = np.zeros(spec.branches)
    dirs[0] = _random_unit(rng, dim)
    for b in range(1, spec.branches):
        parents[b] = int(rng.integers(b))
        attach_pos[b] = rng.uniform()
        starts[b] = starts[parents[b]] + attach_pos[b] * dirs[parents[b]]
        dirs[b] = _random_unit(rng, dim)

    ppb = spec.points_per_branch
    offsets = np.concatenate([rng.uniform(0.0, 1.0, size=ppb) for _ in range(spec.branches)])
    labels = np.repeat(np.arange(spec.branches), ppb)
    points = starts[labels] + offsets[:, None] * dirs[labels]

    geo = _tree_geodesics(spec.branches, labels, offsets, parents, attach_pos)

    mods = []
    for which in (1, 2):
        mod_rng = rng_for(spec.seed, "tree-modality", which)
        rotated = points @ _random_orthogonal(mod_rng, dim).T
        noise = mod_rng.normal(size=points.shape) * np.asarray(spec.branch_noise)[labels, None]
        mods.append(DataMatrix.from_array(rotated + noise))

    return MultimodalSet(
        modality1=mods[0],
        modality2=mods[1],
        labels=labels,
        ground_truth=DataMatrix.from_array(points),
        geodesics=geo,
        noise_spec=tuple(spec.branch_noise),
        seed=spec.seed,
    )


def _tree_geodesics(branches, labels, offsets, parents, attach_pos) -> np.ndarray:
    """Exact path lengths through the tree's 1-D skeleton.

    Nodes are the sample points plus one junction node per branch (its
    attach point, which lies on the parent branch); consecutive nodes
    along each branch are linked by their arclength gap.
    """
    n = len(labels)
    junction = {b: n + b for b in range(branches)}
    total = n + branches
    rows, cols, weights = [], [], []

    def link(a, b, w):
        rows.append(a)
        cols.append(b)
        weights.append(w)

    for b in range(branches):
        nodes = [(0.0, junction[b])]
        nodes.extend((offsets[i], i) for i in np.flatnonzero(labels == b))
        nodes.extend((attach_pos[c], junction[c]) for c in range(branches) if parents[c] == b)
        nodes.sort(key=lambda item: item[0])
        for (s0, a), (s1, bnode) in zip(nodes, nodes[1:]):
            link(a, bnode, s1 - s0)

    graph = csr_matrix((weights, (rows, cols)), shape=(total, total))
    dist = shortest_path(graph, method="D", directed=False)
    return dist[:n, :n]


@dataclass(frozen=True)
class CoupledSpec:
    """Generator settings for the cross-modality association benchmark.

    Each of ``n_pairs`` features exists in both modalities as a noisy
    readout of the same latent cluster variable, so feature j of
    modality 1 is informative about feature j of modality 2. Dropout
    zeroes each entry independently with probability ``dropout``,
    mimicking sparse measurements and destroying the association.
    ``jitter`` may be a single sigma or a per-modality pair; unequal
    jitters mimic one sensor being much noisier than the other.
    """

    n_points: int = 1200
    n_pairs: int = 20
    n_extra: int = 60
    n_clusters: int = 4
    jitter: object = (0.3, 1.5)
    dropout: float = 0.7
    mean_scale: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError(f"dropout must be in [0, 1), got {self.dropout}")
        jitter = self.jitter if isinstance(self.jitter, (tuple, list)) else (self.jitter, self.jitter)
        if len(jitter) != 2 or any(j < 0 for j in jitter):
            raise ValidationError(f"jitter must be one or two sigmas >= 0, got {self.jitter}")
        object.__setattr__(self, "jitter", (float(jitter[0]), float(jitter[1])))
        if self.n_clusters < 2:
            raise ValidationError("n_clusters must be >= 2")
        if self.n_pairs < 1:
            raise ValidationError("n_pairs must be >= 1")
        if self.n_extra < 0:
            raise ValidationError("n_extra must be >= 0")


def make_coupled_features(spec: CoupledSpec) -> MultimodalSet:
    """Plant feature pairs coupled through a shared latent state.

    Points belong to latent clusters; feature j of each modality takes a
    cluster-specific mean plus Gaussian jitter, then suffers dropout.
    The planted pairs are the first ``n_pairs`` columns of each
    modality; ``n_extra`` additional unpaired (but equally informative)
    columns per modality stabilize the data geometry, mirroring how
    real panels measure far more features than get association-tested.
    The clean values depend only on (spec minus noise, seed): rerunning
    with dropout = 0 and jitter = 0 yields the noiseless version of the
    same draw. ``coupled_pairs`` lists the planted (col1, col2) pairs
    and ``ground_truth`` carries the latent cluster index per point.
    """
    rng = rng_for(spec.seed, "coupled-structure")
    z = rng.integers(spec.n_clusters, size=spec.n_points)
    mods = []
    for which in (1, 2):
        means = rng_for(spec.seed, "coupled-means", which).normal(
            0.0, spec.mean_scale, size=(spec.n_clusters, spec.n_pairs + spec.n_extra)
        )
        clean = means[z]
        jitter = spec.jitter[which - 1]
        if jitter > 0:
            clean = clean + rng_for(spec.seed, "coupled-jitter", which).normal(
                0.0, jitter, size=clean.shape
            )
        if spec.dropout > 0:
            mask = rng_for(spec.seed, "coupled-dropout", which).uniform(size=clean.shape)
            clean = np.where(mask < spec.dropout, 0.0, clean)
        mods.append(DataMatrix.from_array(clean))
    return MultimodalSet(
        modality1=mods[0],
        modality2=mods[1],
        labels=z,
        ground_truth=DataMatrix.from_array(z[:, None].astype(np.float64)),
        noise_spec={"jitter": spec.jitter, "dropout": spec.dropout},
        seed=spec.seed,
        coupled_pairs=[(j, j) for j in range(spec.n_pairs)],
    )


def load_digits_subset(n: int = 1000, seed: int = 0) -> Tuple[DataMatrix, np.ndarray]:
    """Seeded subsample of the bundled 8x8 handwritten-digit images.

    Pixel values are rescaled to [0, 1]; returns (data, digit labels).
    """
    from sklearn.datasets import load_digits

    bunch = load_digits()
    total = bunch.data.shape[0]
    if not 1 <= n <= total:
        raise ValidationError(f"n must be in [1, {total}], got {n}")
    idx = rng_for(seed, "digits-subset").permutation(total)[:n]
    idx.sort()
    values = bunch.data[idx] / 16.0
    return DataMatrix.from_array(values), bunch.target[idx].astype(np.int64)


# ---------------------------------------------------------------------------
# file formats


def load_idx(path) -> DataMatrix:
    """Read an IDX image or label file into a DataMatrix.

    Image payloads (magic 0x00000803) are flattened row-major and
    rescaled to [0, 1]; label payloads (magic 0x00000801) keep their raw
    byte values in an N x 1 matrix.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise ParseError(f"{path}: truncated header at byte {len(raw)}")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic == IDX_IMAGES_MAGIC:
        ndim = 3
    elif magic == IDX_LABELS_MAGIC:
        ndim = 1
    else:
        raise ParseError(f"{path}: bad magic 0x{magic:08x} at byte 0")
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise ParseError(f"{path}: truncated dimension header at byte {len(raw)}")
    dims = struct.unpack(f">{ndim}I", raw[4:header_end])
    expected = int(np.prod(dims))
    payload = np.frombuffer(raw, dtype=np.uint8, offset=header_end)
    if payload.size != expected:
        raise ParseError(
            f"{path}: payload has {payload.size} bytes at offset {header_end}, expected {expected}"
        )
    if magic == IDX_IMAGES_MAGIC:
        values = payload.reshape(dims[0], dims[1] * dims[2]).astype(np.float64) / 255.0
    else:
        values = payload.reshape(dims[0], 1).astype(np.float64)
    return DataMatrix.from_array(values)


def save_idx(path, values: np.ndarray, image_shape: Optional[Tuple[int, int]] = None) -> None:
    """Write an IDX file; the inverse of ``load_idx``.

    With ``image_shape`` the values are treated as [0, 1] images,
    rescaled back to bytes and written under the image magic; otherwise
    a single-column label matrix is written under the label magic.
    """
    values = np.asarray(values)
    with open(path, "wb") as fh:
        if image_shape is not None:
            rows, cols = image_shape
            if values.shape[1] != rows * cols:
                raise ValidationError(
                    f"matrix has {values.shape[1]} columns, image shape wants {rows * cols}"
                )
            fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, values.shape[0], rows, cols))
            fh.write(np.clip(np.rint(values * 255.0), 0, 255).astype(np.uint8).tobytes())
        else:
            flat = values.reshape(-1)
            fh.write(struct.pack(">II", IDX_LABELS_MAGIC, flat.shape[0]))
            fh.write(np.clip(np.rint(flat), 0, 255).astype(np.uint8).tobytes())


def load_csv(path) -> DataMatrix:
    """Read a numeric CSV (optional header row) into a DataMatrix."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise ParseError(f"{path}: empty file")
    start = 0
    try:
        [float(cell) for cell in rows[0]]
    except ValueError:
        start = 1  # header row
    if start == len(rows):
        raise ParseError(f"{path}: header but no data rows")
    width = len(rows[start])
    values = np.empty((len(rows) - start, width))
    for i, row in enumerate(rows[start:], start=start):
        if len(row) != width:
            raise ParseError(f"{path}: row {i + 1} has {len(row)} cells, expected {width}")
        for j, cell in enumerate(row):
            try:
                values[i - start, j] = float(cell)
            except ValueError:
                raise ParseError(f"{path}: non-numeric cell at row {i + 1}, column {j + 1}: {cell!r}")
    return DataMatrix.from_array(values)


def save_csv(path, values: np.ndarray, header: Optional[Sequence[str]] = None) -> None:
    """Write a matrix as CSV with round-trip-exact float formatting."""
    values = np.atleast_2d(np.asarray(values))
    buf = io.StringIO()
    if header is not None:
        buf.write(",".join(header) + "\n")
    for row in values:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    Path(path).write_text(buf.getvalue())


_BIN_HEADER = struct.Struct("<QQ")


def save_matrix(path, values: np.ndarray) -> None:
    """Write a little-endian float64 binary: 16-byte (N, D) header + payload."""
    values = np.ascontiguousarray(np.atleast_2d(values), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_BIN_HEADER.pack(values.shape[0], values.shape[1]))
        fh.write(values.tobytes())


def load_matrix(path) -> np.ndarray:
    """Read back a matrix written by ``save_matrix``; bit-exact round trip."""
    raw = Path(path).read_bytes()
    if len(raw) < _BIN_HEADER.size:
        raise ParseError(f"{path}: truncated header at byte {len(raw)}")
    n, d = _BIN_HEADER.unpack(raw[: _BIN_HEADER.size])
    expected = _BIN_HEADER.size + 8 * n * d
    if len(raw) != expected:
        raise ParseError(f"{path}: file has {len(raw)} bytes, header implies {expected}")
    return np.frombuffer(raw, dtype="<f8", offset=_BIN_HEADER.size).reshape(n, d).copy()
