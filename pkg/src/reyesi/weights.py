"""Sparse spatial weights: contiguity builders, row standardization and the
scalar summaries used by the randomization moments."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .exceptions import DimensionMismatch, InputError, IslandUnit, NotStandardized, SelfEdge, UnknownLabel

__all__ = [
    "SpatialWeights",
    "WeightSummaries",
    "lattice_weights",
    "from_edge_list",
    "row_standardize",
    "weight_summaries",
]

_OFFSETS = {
    "rook": ((-1, 0), (1, 0), (0, -1), (0, 1)),
    "queen": ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)),
}


class SpatialWeights:
    """Immutable ``n x n`` weight matrix held in CSR form.

    CSR rows are the per-unit sorted neighbor lists; explicit zeros are never
    stored and the diagonal is always empty.

    Parameters
    ----------
    matrix : scipy.sparse matrix or array_like
    ids : sequence, optional
        Unit labels, defaulting to ``0 .. n-1``.
    standardized : bool
        Whether rows have been scaled to sum to one.
    meta : dict, optional
        Free-form provenance (e.g. lattice shape and criterion).
    """

    def __init__(self, matrix, ids=None, standardized=False, meta=None):
        m = sparse.csr_matrix(matrix, dtype=float, copy=True)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"weights must be square, got {m.shape}")
        m.eliminate_zeros()
        m.sort_indices()
        if (m.data < 0).any():
            raise InputError("weights must be nonnegative")
        if m.diagonal().any():
            raise SelfEdge("weights must have an empty diagonal")
        m.data.setflags(write=False)
        self.sparse = m
        self.ids = list(range(m.shape[0])) if ids is None else list(ids)
        if len(self.ids) != m.shape[0]:
            raise DimensionMismatch(f"{len(self.ids)} ids for {m.shape[0]} units")
        self.standardized = bool(standardized)
        self.meta = dict(meta or {})
        if self.standardized:
            sums = self.row_sums
            if np.abs(sums - 1.0).max(initial=0.0) > 1e-12:
                raise NotStandardized("a row does not sum to one")

    @property
    def n(self):
        return self.sparse.shape[0]

    @property
    def nnz(self):
        return self.sparse.nnz

    @property
    def row_sums(self):
        return np.asarray(self.sparse.sum(axis=1)).ravel()

    @property
    def cardinalities(self):
        """Number of neighbors per unit."""
        return np.diff(self.sparse.indptr)

    @property
    def islands(self):
        """Indices of units with no neighbors."""
        return np.flatnonzero(self.cardinalities == 0)

    @property
    def s0(self):
        return math.fsum(self.sparse.data)

    def neighbors(self, i):
        m = self.sparse
        return m.indices[m.indptr[i] : m.indptr[i + 1]]

    def edges(self):
        """``(rows, cols, values)`` arrays of the stored entries, row-major."""
        m = self.sparse.tocoo()
        return m.row.astype(np.intp), m.col.astype(np.intp), m.data.copy()

    def to_dense(self):
        return self.sparse.toarray()

    def is_symmetric_structure(self):
        pattern = (self.sparse != 0).astype(np.int8)
        return (pattern != pattern.T).nnz == 0

    def subset(self, keep):
        """Induced sub-matrix on ``keep`` (not re-standardized)."""
        keep = np.asarray(keep, dtype=np.intp)
        m = self.sparse[keep][:, keep]
        return SpatialWeights(m, [self.ids[k] for k in keep], False, self.meta)

    def __repr__(self):
        return f"SpatialWeights(n={self.n}, nnz={self.nnz}, standardized={self.standardized})"


def lattice_weights(rows, cols, criterion="queen"):
    """Binary contiguity on a ``rows x cols`` grid, units numbered row-major.

    Examples
    --------
    >>> w = lattice_weights(3, 3, "rook")
    >>> w.cardinalities.tolist()
    [2, 3, 2, 3, 4, 3, 2, 3, 2]
    """
    if criterion not in _OFFSETS:
        raise ValueError(f"criterion must be 'queen' or 'rook', got {criterion!r}")
    rows, cols = int(rows), int(cols)
    if rows < 2 or cols < 2:
        raise InputError(f"lattice needs rows, cols >= 2, got {rows}x{cols}")
    src, dst = [], []
    for r in range(rows):
        for c in range(cols):
            for dr, dc in _OFFSETS[criterion]:
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols:
                    src.append(r * cols + c)
                    dst.append(rr * cols + cc)
    n = rows * cols
    m = sparse.csr_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
    meta = {"source": "lattice", "rows": rows, "cols": cols, "criterion": criterion}
    return SpatialWeights(m, meta=meta)


def from_edge_list(edges, ids):
    """Symmetric binary weights from undirected ``(label, label)`` pairs.

    Duplicate and reversed edges collapse to a single symmetric pair. Units
    without edges are kept and show up in :attr:`SpatialWeights.islands`.
    """
    ids = list(ids)
    index = {}
    for k, label in enumerate(ids):
        if label in index:
            raise InputError(f"duplicate unit id {label!r}")
        index[label] = k
    pairs = set()
    for a, b in edges:
        for label in (a, b):
            if label not in index:
                raise UnknownLabel(f"edge endpoint {label!r} is not a known unit")
        if a == b:
            raise SelfEdge(f"self-edge on unit {a!r}")
        i, j = index[a], index[b]
        pairs.add((i, j))
        pairs.add((j, i))
    n = len(ids)
    if pairs:
        src, dst = zip(*sorted(pairs))
    else:
        src, dst = (), ()
    m = sparse.csr_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
    return SpatialWeights(m, ids, meta={"source": "edge_list"})


def row_standardize(w, island_policy="error"):
    """Scale each row to sum to one.

    Parameters
    ----------
    w : SpatialWeights
    island_policy : {"error", "drop_unit"}
        What to do with units that have no neighbors. ``drop_unit`` removes
        them (and repeats until none are left, since removal can isolate
        others) before scaling; the surviving ids keep their order.
    """
    if island_policy not in ("error", "drop_unit", "drop"):
        raise ValueError(f"unknown island_policy {island_policy!r}")
    meta = dict(w.meta)
    islands = w.islands
    if islands.size:
        if island_policy == "error":
            names = ", ".join(repr(w.ids[i]) for i in islands)
            raise IslandUnit(f"units without neighbors: {names}")
        dropped = []
        while islands.size:
            dropped.extend(w.ids[i] for i in islands)
            keep = np.setdiff1d(np.arange(w.n), islands)
            w = w.subset(keep)
            islands = w.islands
        meta["dropped_units"] = dropped
    m = w.sparse.copy()
    sums = np.asarray(m.sum(axis=1)).ravel()
    m.data = m.data / np.repeat(sums, np.diff(m.indptr))
    return SpatialWeights(m, w.ids, standardized=True, meta=meta)


@dataclass(frozen=True)
class WeightSummaries:
    """``s0``: total weight; ``c``: row sums of squares; ``cross``: sparse
    ``W W^T`` with the diagonal removed (``c_ij`` for ``i != j``)."""

    s0: float
    c: np.ndarray
    cross: sparse.csr_matrix

    def cross_total(self):
        return math.fsum(self.cross.data)


def weight_summaries(w):
    """Scalar summaries consumed by the second-moment formulas."""
    if not w.standardized:
        raise NotStandardized("weight summaries require row-standardized weights")
    m = w.sparse
    c = np.asarray(m.multiply(m).sum(axis=1)).ravel()
    cross = (m @ m.T).tocsr()
    cross.setdiag(0.0)
    cross.eliminate_zeros()
    cross.sort_indices()
    return WeightSummaries(w.s0, c, cross)
