"""Volume n-norms, anchored semi-norms, and finite-prefix sequence estimators.

The concrete norm used throughout is the Gram (volume) n-norm on R^d:

    ||x_1, ..., x_n|| = sqrt(det G),   G_ij = <x_i, x_j>,

the n-dimensional volume of the parallelepiped spanned by the arguments.
Freezing the last n-1 slots at a fixed anchor tuple (b_2, ..., b_n) yields
the anchored semi-norm ||x, b_2, ..., b_n||, which vanishes exactly on
span(b_2, ..., b_n).  Every "distance" in this package is measured in that
semi-norm, so equalities downstream hold modulo the anchor span (the
semi-norm kernel).

All functions here are pure; values are immutable after construction and
safe to evaluate concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Relative pivot threshold for numerical rank decisions.  Chosen to leave
# headroom between genuine rank deficiency and double-precision roundoff.
DEFAULT_RANK_TOL = 1e-9


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite 1-D float64 array, optionally checking its length."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if v.size < 1:
        raise ValueError("vector must have length >= 1")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    if dim is not None and v.size != dim:
        raise ValueError(f"dimension mismatch: expected length {dim}, got {v.size}")
    return v


def _as_matrix(vectors) -> np.ndarray:
    rows = np.asarray(vectors, dtype=float)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    if rows.ndim != 2:
        raise ValueError("expected a sequence of equal-length vectors")
    if not np.all(np.isfinite(rows)):
        raise ValueError("vectors have non-finite coordinates")
    return rows


def is_linearly_dependent(vectors, tol: float = DEFAULT_RANK_TOL) -> bool:
    """Decide linear dependence by row elimination with partial pivoting.

    The pivot threshold is ``tol`` times the largest absolute entry of the
    input (or 1 if all entries are zero), so the decision is scale-free.
    Degenerate inputs (zero vectors, more vectors than coordinates) are
    valid and simply come out dependent.
    """
    rows = _as_matrix(vectors)
    k, d = rows.shape
    scale = np.max(np.abs(rows)) if rows.size else 0.0
    if scale == 0.0:
        scale = 1.0
    threshold = tol * scale

    m = rows.copy()
    rank = 0
    for col in range(d):
        if rank == k:
            break
        pivot_row = rank + int(np.argmax(np.abs(m[rank:, col])))
        if abs(m[pivot_row, col]) <= threshold:
            continue
        if pivot_row != rank:
            m[[rank, pivot_row]] = m[[pivot_row, rank]]
        factors = m[rank + 1:, col] / m[rank, col]
        m[rank + 1:] -= np.outer(factors, m[rank])
        rank += 1
    return rank < k


def gram_nnorm(vectors, tol: float = DEFAULT_RANK_TOL) -> float:
    """Volume of the parallelepiped spanned by ``vectors``.

    Returns sqrt(max(0, det G)) with G the Gram matrix of the tuple.  A tuple
    that is linearly dependent up to the rank tolerance returns exactly 0.0,
    so degeneracy is decidable rather than a roundoff-sized residue.  Tiny
    negative determinants from floating-point noise are clamped before the
    square root.
    """
    rows = _as_matrix(vectors)
    k, d = rows.shape
    if k > d:
        raise ValueError(f"norm order {k} exceeds space dimension {d}")
    if is_linearly_dependent(rows, tol):
        return 0.0
    g = rows @ rows.T
    det = float(np.linalg.det(g))
    return float(np.sqrt(max(det, 0.0)))


@dataclass(eq=False)
class AnchoredSpace:
    """R^dim carrying the semi-norm ||x, b_2, ..., b_n|| with fixed anchors.

    ``anchors`` holds the n-1 frozen slots as rows; they must be linearly
    independent under ``rank_tol``.  The orthonormal split of R^dim into the
    anchor span and its complement is precomputed: the semi-norm of x equals
    (Euclidean length of the complement part of x) * (anchor volume), which
    is what the fast batched evaluator uses.
    """

    dim: int
    order: int
    anchors: np.ndarray
    rank_tol: float = DEFAULT_RANK_TOL
    anchor_volume: float = field(init=False)
    anchor_basis: np.ndarray = field(init=False)
    complement_basis: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if not (2 <= self.order <= self.dim):
            raise ValueError(f"order must satisfy 2 <= order <= dim, got order={self.order}, dim={self.dim}")
        anchors = _as_matrix(self.anchors)
        if anchors.shape != (self.order - 1, self.dim):
            raise ValueError(
                f"anchors must be {self.order - 1} vectors of length {self.dim}, got shape {anchors.shape}"
            )
        if is_linearly_dependent(anchors, self.rank_tol):
            raise ValueError("anchors must be linearly independent")
        self.anchors = anchors
        self.anchors.setflags(write=False)
        self.anchor_volume = gram_nnorm(anchors, self.rank_tol)
        q, _ = np.linalg.qr(anchors.T, mode="complete")
        self.anchor_basis = q[:, : self.order - 1]
        self.complement_basis = q[:, self.order - 1:]
        self.anchor_basis.setflags(write=False)
        self.complement_basis.setflags(write=False)

    @property
    def complement_dim(self) -> int:
        return self.dim - (self.order - 1)

    def seminorm(self, x) -> float:
        """||x, b_2, ..., b_n|| via the Gram determinant, with the exact-zero snap."""
        x = as_vector(x, self.dim)
        return gram_nnorm(np.vstack([x, self.anchors]), self.rank_tol)

    def seminorm_raw(self, x) -> float:
        """Semi-norm via the projection identity, without the dependence snap.

        ||x, b_2, ..., b_n|| equals (anchor volume) * ||x - P x||_2 with P the
        orthogonal projector onto the anchor span.  Unlike the Gram
        determinant this form keeps full relative accuracy for tiny x, so
        residual and displacement arithmetic must use it: the determinant's
        cancellation floor (or the dependence snap) would otherwise forge
        certificates at small scales.
        """
        x = as_vector(x, self.dim)
        perp = x - self.anchor_basis @ (self.anchor_basis.T @ x)
        return self.anchor_volume * float(np.linalg.norm(perp))

    def seminorm_batch(self, points: np.ndarray) -> np.ndarray:
        """Semi-norms of many row points at once via the projection identity.

        Fast path for sampling loops and solver internals: no dependence
        snap, full relative accuracy at every scale.
        """
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ValueError(f"expected shape (m, {self.dim}), got {pts.shape}")
        perp = pts - (pts @ self.anchor_basis) @ self.anchor_basis.T
        return self.anchor_volume * np.linalg.norm(perp, axis=1)

    def embed(self, complement_coords, anchor_coords=None) -> np.ndarray:
        """Build a point from coordinates in the orthonormal complement basis,
        plus an optional combination of the anchors (a kernel displacement)."""
        u = np.asarray(complement_coords, dtype=float)
        x = self.complement_basis @ u
        if anchor_coords is not None:
            x = x + np.asarray(anchor_coords, dtype=float) @ self.anchors
        return x


def anchored_seminorm(space: AnchoredSpace, x) -> float:
    """||x, b_2, ..., b_n|| for the space's anchors; zero exactly on their span."""
    return space.seminorm(x)


@dataclass(eq=False)
class Ball:
    """Semi-norm ball around ``center``; open or closed per the flag."""

    space: AnchoredSpace
    center: np.ndarray
    radius: float
    closed: bool = False

    def __post_init__(self):
        self.center = as_vector(self.center, self.space.dim)
        if not (self.radius > 0):
            raise ValueError("radius must be positive")

    def contains(self, x) -> bool:
        s = self.space.seminorm(as_vector(x, self.space.dim) - self.center)
        return s <= self.radius if self.closed else s < self.radius


def ball_membership(ball: Ball, x) -> bool:
    """Membership of ``x`` in the given semi-norm ball."""
    return ball.contains(x)


@dataclass(eq=False)
class ProductPoint:
    """Element (left, right) of the doubled space R^d x R^d."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        self.left = as_vector(self.left)
        self.right = as_vector(self.right)
        if self.left.size != self.right.size:
            raise ValueError("product point components must have equal length")


def product_nnorm(points: Sequence[ProductPoint], tol: float = DEFAULT_RANK_TOL) -> float:
    """n-norm on the doubled space: the sum of the two component volumes.

    ||(x_1, y_1), ..., (x_n, y_n)|| = ||x_1, ..., x_n|| + ||y_1, ..., y_n||.
    """
    if len(points) < 1:
        raise ValueError("need at least one product point")
    lefts = np.vstack([p.left for p in points])
    rights = np.vstack([p.right for p in points])
    if lefts.shape[1] != rights.shape[1]:
        raise ValueError("dimension mismatch across product points")
    return gram_nnorm(lefts, tol) + gram_nnorm(rights, tol)


@dataclass(eq=False)
class SequencePrefix:
    """Finite prefix x_1, ..., x_m of a sequence in an anchored space."""

    space: AnchoredSpace
    items: np.ndarray

    def __post_init__(self):
        items = _as_matrix(self.items)
        if items.shape[0] < 1:
            raise ValueError("sequence prefix must be nonempty")
        if items.shape[1] != self.space.dim:
            raise ValueError(
                f"sequence items must have length {self.space.dim}, got {items.shape[1]}"
            )
        self.items = items
        self.items.setflags(write=False)

    def __len__(self) -> int:
        return self.items.shape[0]


def b_cauchy_tail(seq: SequencePrefix, from_index: int) -> float:
    """Largest pairwise semi-norm distance in the tail of the prefix.

    ``from_index`` is 1-based; the tail is x_{from_index}, ..., x_m.  This is
    the finite-prefix residual standing in for the Cauchy condition: it must
    shrink as ``from_index`` grows for the prefix to look Cauchy.  A singleton
    tail gives 0.
    """
    m = len(seq)
    if not (1 <= from_index <= m):
        raise IndexError(f"from_index must lie in [1, {m}], got {from_index}")
    tail = seq.items[from_index - 1:]
    worst = 0.0
    for i in range(tail.shape[0]):
        for j in range(i + 1, tail.shape[0]):
            worst = max(worst, seq.space.seminorm(tail[j] - tail[i]))
    return worst


def b_limit_estimate(seq: SequencePrefix, candidate) -> float:
    """Semi-norm gap between the last prefix element and a candidate limit.

    Finite-prefix proxy for convergence: reported as a residual, never as a
    boolean claim about the infinite tail.
    """
    c = as_vector(candidate, seq.space.dim)
    return seq.space.seminorm(seq.items[-1] - c)
