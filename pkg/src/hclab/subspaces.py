"""Subspaces of C^n represented by orthonormal frames.

A subspace remembers the rank tolerance that was used to decide its
dimension, because every rank here is a tolerance decision: the infinite
picture works with exact closures, the finite model cannot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, NotContained
from .linalg import DEFAULT_RANK_TOL, as_complex_matrix

__all__ = ["Subspace", "orthonormalize", "subspace_sum", "subspace_ominus", "project"]


@dataclass(frozen=True)
class Subspace:
    """An orthonormal frame (ambient_dim x d) plus its rank tolerance."""

    frame: np.ndarray
    rank_tol: float = DEFAULT_RANK_TOL

    def __post_init__(self):
        f = as_complex_matrix(self.frame)
        object.__setattr__(self, "frame", f)
        d = f.shape[1]
        if d > f.shape[0]:
            raise ValueError("frame has more columns than ambient dimension")
        gram = f.conj().T @ f
        if d and np.linalg.norm(gram - np.eye(d)) > 10 * np.finfo(float).eps * f.shape[0] * max(1, d):
            raise ValueError("frame columns are not orthonormal")

    @property
    def ambient_dim(self) -> int:
        return self.frame.shape[0]

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.conj().T

    def contains(self, v: np.ndarray, tol: float | None = None) -> bool:
        v = np.asarray(v, dtype=complex)
        nrm = np.linalg.norm(v)
        if nrm == 0:
            return True
        tol = self.rank_tol if tol is None else tol
        return float(np.linalg.norm(v - self.frame @ (self.frame.conj().T @ v))) <= tol * nrm


def orthonormalize(vectors, rank_tol: float = DEFAULT_RANK_TOL,
                   scale: float | None = None) -> Subspace:
    """Orthonormal frame for the numerically significant span of ``vectors``.

    ``vectors`` is a sequence of ambient vectors or (n, k) column blocks.
    Directions whose singular value falls below ``rank_tol * scale`` are
    dropped; the default scale is the largest column norm.  Pass an explicit
    scale when the inputs may consist entirely of numerical dust (e.g.
    projection residuals), which must not be renormalized into directions.
    """
    cols = []
    n = None
    for v in vectors:
        a = np.asarray(v, dtype=complex)
        a = a.reshape(-1, 1) if a.ndim == 1 else a
        if n is None:
            n = a.shape[0]
        elif a.shape[0] != n:
            raise ValueError("vectors have mismatched ambient dimensions")
        cols.append(a)
    if not cols:
        raise EmptyInput("no vectors given")
    m = np.hstack(cols)
    if m.shape[1] == 0:
        return Subspace(frame=np.zeros((n, 0), dtype=complex), rank_tol=rank_tol)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if scale is None:
        scale = float(np.max(np.linalg.norm(m, axis=0))) if m.size else 0.0
    d = int(np.sum(s > rank_tol * max(scale, 1e-300)))
    return Subspace(frame=u[:, :d], rank_tol=rank_tol)


def subspace_sum(a: Subspace, b: Subspace) -> Subspace:
    """Span of the union of two subspaces."""
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("ambient dimensions differ")
    tol = min(a.rank_tol, b.rank_tol)
    if a.dim == 0:
        return Subspace(b.frame, tol)
    if b.dim == 0:
        return Subspace(a.frame, tol)
    return orthonormalize([a.frame, b.frame], rank_tol=tol)


def subspace_ominus(a: Subspace, b: Subspace, containment_tol: float = 1e-8) -> Subspace:
    """Orthogonal complement ``a (-) b`` for ``b`` contained in ``a``.

    Raises ``NotContained`` when ``b`` sticks out of ``a`` beyond tolerance.
    """
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("ambient dimensions differ")
    if b.dim:
        leak = np.linalg.norm(b.frame - a.frame @ (a.frame.conj().T @ b.frame))
        if leak > containment_tol * max(1.0, np.sqrt(b.dim)):
            raise NotContained(f"second subspace leaks out by {leak:.3e}")
    if b.dim == 0:
        return a
    residual = a.frame - b.frame @ (b.frame.conj().T @ a.frame)
    # residual columns can be nearly dependent; re-orthonormalize with the
    # dimension forced to dim(a) - dim(b)
    u, s, _ = np.linalg.svd(residual, full_matrices=False)
    d = max(a.dim - b.dim, 0)
    return Subspace(frame=u[:, :d], rank_tol=a.rank_tol)


def project(a: Subspace, v) -> np.ndarray:
    """Orthogonal projection of an ambient vector onto the subspace."""
    v = np.asarray(v, dtype=complex)
    return a.frame @ (a.frame.conj().T @ v)
