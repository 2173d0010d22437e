"""Orthonormal subspaces of R^d: construction, projection, random sampling.

A subspace is stored as a d x k matrix with orthonormal columns.  The projector
onto the subspace is B B^T and is never materialized; projections are computed
as B (B^T x).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidDimension, ZeroRank

# relative singular-value / column-norm cutoff below which directions are
# treated as numerically zero
RANK_TOL = 1e-10

# orthonormality acceptance on B^T B - I, per entry
ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class Subspace:
    """A k-dimensional linear subspace of R^d with an orthonormal basis.

    Immutable after construction; safe for concurrent reads.
    """

    basis: np.ndarray  # shape (d, k), orthonormal columns

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2:
            raise InvalidDimension(f"basis must be 2-d, got shape {b.shape}")
        d, k = b.shape
        if not (1 <= k <= d):
            raise InvalidDimension(f"need 1 <= k <= d, got k={k}, d={d}")
        if not np.all(np.isfinite(b)):
            raise InvalidDimension("basis contains non-finite entries")
        gram = b.T @ b
        if np.max(np.abs(gram - np.eye(k))) > ORTHO_TOL:
            raise InvalidDimension("basis columns are not orthonormal within 1e-10")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def dim_ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def dim_sub(self) -> int:
        return self.basis.shape[1]


def orthonormalize(matrix) -> Subspace:
    """Orthonormal basis for the column space of ``matrix``.

    Modified Gram-Schmidt with one re-orthogonalization pass, deterministic in
    the input column order.  Columns whose residual falls below ``RANK_TOL``
    relative to the largest input column norm are dropped, so the returned
    k is the numerical rank.

    Raises ZeroRank if every column is numerically zero.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise InvalidDimension(f"expected a nonempty 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidDimension("matrix contains non-finite entries")

    col_norms = np.linalg.norm(a, axis=0)
    scale = float(col_norms.max(initial=0.0))
    if scale <= 0.0:
        raise ZeroRank("all columns are zero")
    cutoff = RANK_TOL * scale

    cols = []
    for j in range(a.shape[1]):
        v = a[:, j].copy()
        for _ in range(2):  # MGS + one re-orthogonalization pass
            for q in cols:
                v -= (q @ v) * q
        nrm = np.linalg.norm(v)
        if nrm > cutoff:
            cols.append(v / nrm)
    if not cols:
        raise ZeroRank("matrix has numerical rank zero")
    return Subspace(np.column_stack(cols))


def project(subspace: Subspace, x) -> np.ndarray:
    """Orthogonal projection of x onto the subspace: B (B^T x)."""
    v = np.asarray(x, dtype=float)
    if v.shape[-1] != subspace.dim_ambient:
        raise DimensionMismatch(
            f"vector dim {v.shape[-1]} != ambient dim {subspace.dim_ambient}"
        )
    b = subspace.basis
    return (v @ b) @ b.T


def projection_norm(subspace: Subspace, x) -> np.ndarray:
    """||Pi_V x|| without forming the projected vector. Works on batches."""
    v = np.asarray(x, dtype=float)
    if v.shape[-1] != subspace.dim_ambient:
        raise DimensionMismatch(
            f"vector dim {v.shape[-1]} != ambient dim {subspace.dim_ambient}"
        )
    return np.linalg.norm(v @ subspace.basis, axis=-1)


def sample_random_subspace(d: int, k: int, rng: np.random.Generator) -> Subspace:
    """Haar-uniform k-dimensional subspace of R^d.

    Orthonormalizes a d x k standard Gaussian matrix; the distribution of the
    resulting column span is rotation invariant.
    """
    if not (1 <= k <= d):
        raise InvalidDimension(f"need 1 <= k <= d, got k={k}, d={d}")
    g = rng.standard_normal((d, k))
    sub = orthonormalize(g)
    # a Gaussian matrix is full rank almost surely; retry on the null event
    while sub.dim_sub < k:  # pragma: no cover
        g = rng.standard_normal((d, k))
        sub = orthonormalize(g)
    return sub


def full_space(d: int) -> Subspace:
    """The trivial subspace V = R^d."""
    return Subspace(np.eye(d))
