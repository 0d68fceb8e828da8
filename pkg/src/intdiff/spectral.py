"""Eigendecomposition, graph filtering, spectral entropy and timescale selection.

The diffusion operator P = D^-1 K is similar to the symmetric matrix
M = D^1/2 P D^-1/2, so all spectral work happens in M's orthonormal
eigenbasis and is mapped back through D^(+/-)1/2. This keeps filtering
numerically exact: the lambda^t filter reproduces P^t to machine
precision, which a direct (non-orthonormal) eigenvector expansion of P
would not.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NumericalError, ValidationError
from .operators import DataMatrix, DiffusionOperator

DEFAULT_T_MAX = 64


@dataclass
class EigenSystem:
    """Spectral data of a diffusion operator, sorted by descending eigenvalue.

    ``ortho_vectors`` are the orthonormal eigenvectors of the symmetric
    conjugate M; ``right_vectors`` are the corresponding right
    eigenvectors of P itself (columns of D^-1/2 V, not unit norm).
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    ortho_vectors: np.ndarray
    sqrt_degrees: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass
class EntropyCurve:
    """Spectral entropy sampled over integer timescales, with its elbow."""

    timescales: np.ndarray
    entropies: np.ndarray
    elbow: int

    def to_csv(self) -> str:
        """Serialize as ``t,entropy,is_elbow`` rows."""
        buf = io.StringIO()
        buf.write("t,entropy,is_elbow\n")
        for t, s in zip(self.timescales, self.entropies):
            buf.write(f"{int(t)},{float(s)!r},{1 if int(t) == self.elbow else 0}\n")
        return buf.getvalue()


def eigendecompose(op: DiffusionOperator) -> EigenSystem:
    """Full eigendecomposition of P via its symmetric conjugate.

    Decomposes M = D^1/2 P D^-1/2 with an orthonormal symmetric solver,
    recovers P's right eigenvectors as D^-1/2 V, and sorts everything by
    descending eigenvalue. The result is cached on the operator.
    """
    if op.eigen is not None:
        return op.eigen
    s = np.sqrt(op.degrees)
    m = (s[:, None] * op.values) / s[None, :]
    m = (m + m.T) / 2.0
    try:
        lam, vec = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        spread = float(op.degrees.max() / op.degrees.min())
        raise NumericalError(
            f"symmetric eigensolver failed: {exc} (degree spread {spread:.3e})"
        ) from exc
    order = np.argsort(-lam)
    lam = lam[order]
    vec = vec[:, order]
    eig = EigenSystem(
        eigenvalues=lam,
        right_vectors=vec / s[:, None],
        ortho_vectors=vec,
        sqrt_degrees=s,
    )
    op.eigen = eig
    return eig


def graph_filter(
    op: DiffusionOperator,
    signal,
    h: Callable[[np.ndarray], np.ndarray],
) -> "np.ndarray | DataMatrix":
    """Apply a spectral response h to a graph signal.

    Computes D^-1/2 V h(Lambda) V^T D^1/2 f in the orthonormal basis of
    the symmetric conjugate, so h(lambda) = lambda^t reproduces P^t f
    exactly. ``signal`` may be a DataMatrix (row-aligned with the
    operator), a vector, or an N x d array; the output matches the
    input's type and shape.
    """
    if isinstance(signal, DataMatrix):
        values = signal.values
    else:
        values = np.asarray(signal, dtype=np.float64)
    squeeze = values.ndim == 1
    f = values[:, None] if squeeze else values
    if f.shape[0] != op.n:
        raise ValidationError(f"signal has {f.shape[0]} rows, operator expects {op.n}")
    eig = eigendecompose(op)
    response = np.asarray(h(eig.eigenvalues), dtype=np.float64)
    if response.shape not in ((), (eig.n,)):
        raise ValidationError("spectral response must be scalar or one value per eigenvalue")
    response = np.broadcast_to(response, (eig.n,))
    coeffs = eig.ortho_vectors.T @ (f * eig.sqrt_degrees[:, None])
    out = (eig.ortho_vectors @ (response[:, None] * coeffs)) / eig.sqrt_degrees[:, None]
    if squeeze:
        out = out[:, 0]
    if isinstance(signal, DataMatrix):
        return signal.with_values(out)
    return out


def _entropy_weights(eigenvalues: np.ndarray, t: int, top_k: Optional[int]) -> np.ndarray:
    lam = np.abs(eigenvalues)
    if top_k is not None:
        if top_k < 1:
            raise ValidationError(f"top_k must be >= 1, got {top_k}")
        lam = np.sort(lam)[::-1][:top_k]
    return lam**t


def spectral_entropy(eig: EigenSystem, t: int, top_k: Optional[int] = None) -> float:
    """Shannon entropy (nats) of the power-normalized eigenvalue spectrum.

    psi_i = |lambda_i|^t / sum_j |lambda_j|^t; S = -sum psi log psi with
    0 log 0 = 0. Absolute values keep psi a probability vector when P
    has negative eigenvalues. ``top_k`` optionally truncates the
    spectrum to the largest-magnitude eigenvalues.
    """
    if t != int(t) or t < 1:
        raise ValidationError(f"timescale must be a positive integer, got {t}")
    w = _entropy_weights(eig.eigenvalues, int(t), top_k)
    psi = w / w.sum()
    nonzero = psi > 0.0
    return float(-(psi[nonzero] * np.log(psi[nonzero])).sum())


def find_elbow(values: Sequence[float], timescales: Optional[Sequence[int]] = None) -> int:
    """Max-distance-to-chord elbow of a sampled curve.

    Returns the timescale whose point (t, y(t)) lies farthest from the
    chord joining the first and last samples; ties break toward the
    smallest t. A perfectly linear curve therefore yields the first
    timescale.
    """
    y = np.asarray(values, dtype=np.float64)
    if y.ndim != 1 or y.size < 2:
        raise ValidationError("elbow detection needs a 1-D curve with >= 2 samples")
    t = (
        np.arange(1, y.size + 1, dtype=np.float64)
        if timescales is None
        else np.asarray(timescales, dtype=np.float64)
    )
    if t.shape != y.shape:
        raise ValidationError("timescales and values must have equal length")
    dx = t[-1] - t[0]
    dy = y[-1] - y[0]
    norm = np.hypot(dx, dy)
    if norm == 0.0:
        return int(t[0])
    dist = np.abs(dx * (y - y[0]) - dy * (t - t[0])) / norm
    return int(t[int(np.argmax(dist))])


def select_timescale(
    eig: EigenSystem,
    t_max: int = DEFAULT_T_MAX,
    top_k: Optional[int] = None,
) -> EntropyCurve:
    """Scan S(P, t) for t = 1..t_max and pick the elbow timescale."""
    if t_max < 3:
        raise ValidationError(f"t_max must be >= 3, got {t_max}")
    ts = np.arange(1, t_max + 1)
    lam = _entropy_weights(eig.eigenvalues, 1, top_k)
    entropies = np.empty(t_max, dtype=np.float64)
    for i, t in enumerate(ts):
        w = lam ** int(t)
        psi = w / w.sum()
        nz = psi > 0.0
        entropies[i] = -(psi[nz] * np.log(psi[nz])).sum()
    return EntropyCurve(ts, entropies, find_elbow(entropies, ts))
