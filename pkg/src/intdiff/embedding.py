"""Diffusion-map embeddings of (possibly non-symmetric) fused operators.

Kernel-derived operators have a real spectrum reachable through the
symmetric conjugate, but fused products generally do not, so the
embedding path runs a general eigendecomposition, drops the trivial
flat direction, and turns any complex conjugate eigenpair into two real
coordinates (real and imaginary parts).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NumericalError, SizeError, ValidationError
from .fusion import IntegratedOperator
from .operators import DiffusionOperator
from .spectral import eigendecompose

DEFAULT_COMPONENTS = 20

_TRIVIAL_TOL = 1e-8
_COMPLEX_TOL = 1e-10
_RESIDUAL_IMAG_TOL = 1e-6


@dataclass
class Embedding:
    """Diffusion-map coordinates, ordered by descending eigenvalue magnitude.

    ``eigenvalues_used`` holds the (possibly complex) eigenvalue behind
    each coordinate column. ``complex_pairs`` flags that at least one
    conjugate pair was split into real/imaginary coordinate columns;
    ``svd_fallback`` flags the degraded singular-vector path.
    """

    coords: np.ndarray
    eigenvalues_used: np.ndarray
    trivial_dropped: bool
    row_ids: np.ndarray
    complex_pairs: bool = False
    svd_fallback: bool = False

    @property
    def n_rows(self) -> int:
        return self.coords.shape[0]

    @property
    def n_components(self) -> int:
        return self.coords.shape[1]

    def to_csv(self) -> str:
        header = "row_id," + ",".join(f"dim{j + 1}" for j in range(self.n_components))
        lines = [header]
        for rid, row in zip(self.row_ids, self.coords):
            lines.append(str(int(rid)) + "," + ",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def _fix_signs(coords: np.ndarray) -> np.ndarray:
    for j in range(coords.shape[1]):
        peak = np.argmax(np.abs(coords[:, j]))
        if coords[peak, j] < 0:
            coords[:, j] = -coords[:, j]
    return coords


def _operator_values(op) -> np.ndarray:
    if isinstance(op, (DiffusionOperator, IntegratedOperator)):
        return op.values
    values = np.asarray(op, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValidationError(f"operator must be square, got shape {values.shape}")
    return values


def _svd_embedding(values, m, t, row_ids) -> Embedding:
    u, s, _ = np.linalg.svd(values)
    coords = _fix_signs(u[:, 1 : m + 1] * (s[1 : m + 1] ** t)[None, :])
    return Embedding(
        coords=coords,
        eigenvalues_used=s[1 : m + 1].astype(np.complex128),
        trivial_dropped=True,
        row_ids=row_ids,
        svd_fallback=True,
    )


def diffusion_map(op, m: int = DEFAULT_COMPONENTS, t: int = 1, method: str = "general") -> Embedding:
    """Embed an operator's rows into m diffusion-map coordinates.

    Eigendecomposes the operator, orders eigenpairs by descending
    |lambda|, removes the flat (constant, lambda = 1) direction, and
    scales the next m eigenvectors by lambda^t. Within a degenerate
    lambda = 1 eigenspace (disconnected graphs) the flat direction is
    projected out rather than guessed, so indicator-like coordinates
    survive. Complex conjugate pairs become real/imaginary coordinate
    pairs and set ``complex_pairs``; unexpected residual imaginary parts
    trigger a singular-vector fallback flagged as ``svd_fallback``.

    Parameters
    ----------
    op : DiffusionOperator, IntegratedOperator or square array
    m : int
        Component count, 1 <= m <= N - 1.
    t : int
        Diffusion time scaling the coordinates (default 1).
    method : "general" or "conjugate"
        "conjugate" uses the symmetric-conjugate solver (exact for
        kernel-derived operators, considerably faster); "general" runs
        the non-symmetric solver that fused operators require.

    Each coordinate column's sign is fixed so its largest-magnitude
    entry is positive (a reproducibility convention).
    """
    values = _operator_values(op)
    n = values.shape[0]
    if m < 1:
        raise ValidationError(f"m must be >= 1, got {m}")
    if m > n - 1:
        raise SizeError(f"m must be <= N-1 = {n - 1}, got {m}")
    if t < 0 or t != int(t):
        raise ValidationError(f"t must be a nonnegative integer, got {t}")
    row_ids = getattr(op, "row_ids", None)
    if row_ids is None:
        row_ids = np.arange(n, dtype=np.int64)

    if method == "conjugate":
        return _conjugate_map(op, m, int(t), row_ids)
    if method != "general":
        raise ValidationError(f"method must be 'general' or 'conjugate', got {method!r}")

    try:
        lam, vec = np.linalg.eig(values)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"general eigensolver failed: {exc}") from exc

    trivial = np.abs(lam - 1.0) <= _TRIVIAL_TOL
    coords_cols = []
    eigs_used = []
    complex_pairs = False

    if trivial.any():
        # project the constant direction out of the lambda=1 eigenspace;
        # the orthogonal remainder (indicators on components) is kept
        basis = np.column_stack([np.ones(n) / np.sqrt(n), vec[:, trivial].real])
        q, r = np.linalg.qr(basis)
        scale = np.abs(r[0, 0])
        for j in range(1, min(basis.shape)):
            if np.abs(r[j, j]) > 1e-10 * max(scale, 1.0):
                coords_cols.append(q[:, j].copy())
                eigs_used.append(1.0 + 0.0j)
    nontrivial_idx = np.flatnonzero(~trivial)
    order = nontrivial_idx[np.argsort(-np.abs(lam[nontrivial_idx]), kind="stable")]
    used = np.zeros(len(lam), dtype=bool)
    for idx in order:
        if used[idx] or len(coords_cols) >= m:
            continue
        used[idx] = True
        lam_i = lam[idx]
        v = vec[:, idx]
        if np.abs(lam_i.imag) > _COMPLEX_TOL:
            # pair with the conjugate eigenvalue and emit two real columns
            partner = None
            for jdx in order:
                if not used[jdx] and np.abs(lam[jdx] - np.conj(lam_i)) <= 1e-9:
                    partner = jdx
                    break
            if partner is not None:
                used[partner] = True
            psi = (lam_i**t) * v
            coords_cols.append(psi.real.copy())
            eigs_used.append(lam_i)
            complex_pairs = True
            if len(coords_cols) < m:
                coords_cols.append(psi.imag.copy())
                eigs_used.append(np.conj(lam_i))
        else:
            if np.max(np.abs(v.imag)) > _RESIDUAL_IMAG_TOL:
                return _svd_embedding(values, m, int(t), row_ids)
            coords_cols.append((lam_i.real**t) * v.real)
            eigs_used.append(lam_i.real + 0.0j)

    if len(coords_cols) < m:
        raise NumericalError(
            f"only {len(coords_cols)} usable components found, {m} requested"
        )
    coords = _fix_signs(np.column_stack(coords_cols[:m]))
    if not np.all(np.isfinite(coords)):
        raise NumericalError("embedding produced non-finite coordinates")
    return Embedding(
        coords=coords,
        eigenvalues_used=np.array(eigs_used[:m], dtype=np.complex128),
        trivial_dropped=bool(trivial.any()),
        row_ids=np.asarray(row_ids, dtype=np.int64),
        complex_pairs=complex_pairs,
    )


def _conjugate_map(op, m: int, t: int, row_ids) -> Embedding:
    if not isinstance(op, DiffusionOperator):
        raise ValidationError("conjugate method needs a kernel-derived DiffusionOperator")
    eig = eigendecompose(op)
    phi = eig.right_vectors[:, 1 : m + 1]
    phi = phi / np.linalg.norm(phi, axis=0)[None, :]
    lam = eig.eigenvalues[1 : m + 1]
    coords = _fix_signs(phi * (lam**t)[None, :])
    return Embedding(
        coords=coords,
        eigenvalues_used=lam.astype(np.complex128),
        trivial_dropped=True,
        row_ids=np.asarray(row_ids, dtype=np.int64),
    )


def embedding_distances(embedding: Embedding) -> np.ndarray:
    """Pairwise Euclidean distances between embedded points."""
    from .operators import pairwise_sq_dists

    return np.sqrt(pairwise_sq_dists(embedding.coords))


def scatter_2d(embedding: Embedding, labels: Optional[np.ndarray] = None) -> str:
    """Render the first two embedding coordinates as an SVG scatter plot.

    Points are colored by label (one legend entry per distinct label)
    when labels are given. Layout is deterministic: fixed canvas, fixed
    palette, fixed number formatting.
    """
    from .plots import svg_scatter

    if embedding.n_rows == 0:
        raise ValidationError("cannot plot an empty embedding")
    if embedding.n_components < 2:
        raise ValidationError("scatter needs at least 2 embedding columns")
    return svg_scatter(embedding.coords[:, 0], embedding.coords[:, 1], labels)
