"""Aitchison geometry on the simplex.

Compositions are plain NumPy arrays. One-dimensional input is a single
composition; two-dimensional input holds one composition per row and every
operation is applied row-wise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import (
    AllZeroRow,
    DimensionMismatch,
    DuplicateId,
    InputError,
    NegativeValue,
    NonPositivePart,
)

__all__ = [
    "PART_FLOOR",
    "ContrastMatrix",
    "CompositionSample",
    "closure",
    "perturb",
    "perturb_inverse",
    "power",
    "aitchison_inner",
    "aitchison_norm",
    "clr",
    "clr_inverse",
    "contrast_matrix",
    "ilr",
    "ilr_inverse",
    "geometric_center",
    "center",
    "replace_zeros",
]

# Parts below this are rejected so that logarithms stay finite.
PART_FLOOR = 1e-300


def _positive_parts(x, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2):
        raise DimensionMismatch(f"{name} must be 1-D or 2-D, got {x.ndim}-D")
    if x.shape[-1] < 2:
        raise DimensionMismatch(f"{name} needs at least 2 parts, got {x.shape[-1]}")
    bad = ~np.isfinite(x) | (x < PART_FLOOR)
    if bad.any():
        loc = np.argwhere(bad)[0]
        where = f"row {loc[0]}, part {loc[1]}" if x.ndim == 2 else f"part {loc[0]}"
        raise NonPositivePart(
            f"{name} has a non-positive or non-finite part at {where}: {x[tuple(loc)]!r}"
        )
    return x


def _same_shape(x, y):
    if x.shape[-1] != y.shape[-1]:
        raise DimensionMismatch(f"part counts differ: {x.shape[-1]} vs {y.shape[-1]}")


def closure(v, k=1.0):
    """Rescale positive vectors so that their parts sum to ``k``.

    Parameters
    ----------
    v : array_like
        Strictly positive vector, or a matrix with one vector per row.
    k : float, optional
        Closure constant.

    Returns
    -------
    numpy.ndarray
        Array of the same shape as ``v`` whose rows sum to ``k``.

    Examples
    --------
    >>> closure([3, 1])
    array([0.75, 0.25])
    """
    if not k > 0:
        raise InputError(f"closure constant must be positive, got {k!r}")
    v = _positive_parts(v, "v")
    return k * v / v.sum(axis=-1, keepdims=True)


def perturb(x, y):
    """Simplex addition: closure of the part-wise product."""
    x, y = _positive_parts(x), _positive_parts(y, "y")
    _same_shape(x, y)
    return closure(x * y)


def perturb_inverse(x, y):
    """Simplex subtraction: closure of the part-wise ratio ``x / y``."""
    x, y = _positive_parts(x), _positive_parts(y, "y")
    _same_shape(x, y)
    return closure(x / y)


def power(alpha, x):
    """Simplex scalar multiplication: closure of ``x ** alpha``."""
    x = _positive_parts(x)
    # exp/log keeps large |alpha| from overflowing before the closure
    return clr_inverse(alpha * clr(x))


def aitchison_inner(x, y):
    r"""Aitchison inner product from its double-sum definition.

    .. math:: \langle x, y\rangle_a = \frac{1}{2D}\sum_i\sum_j
              \ln\frac{x_i}{x_j}\ln\frac{y_i}{y_j}

    This is deliberately the O(D^2) log-ratio form rather than the clr
    shortcut, so that it can serve as an oracle for the coordinate routes.
    """
    x, y = _positive_parts(x), _positive_parts(y, "y")
    _same_shape(x, y)
    lx, ly = np.log(x), np.log(y)
    rx = lx[..., :, None] - lx[..., None, :]
    ry = ly[..., :, None] - ly[..., None, :]
    D = x.shape[-1]
    return (rx * ry).sum(axis=(-2, -1)) / (2 * D)


def aitchison_norm(x):
    """Aitchison norm; zero exactly when all parts are equal."""
    return np.sqrt(np.maximum(aitchison_inner(x, x), 0.0))


def clr(x):
    """Centered log-ratio coordinates (each row sums to zero)."""
    lx = np.log(_positive_parts(x))
    return lx - lx.mean(axis=-1, keepdims=True)


def clr_inverse(u):
    """Map real vectors back to the simplex via ``closure(exp(u))``.

    Vectors that do not sum to zero are accepted; the closure removes the
    component along the all-ones direction.
    """
    u = np.asarray(u, dtype=float)
    shifted = np.exp(u - u.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class ContrastMatrix:
    """Orthonormal ilr basis stored as a ``(D - 1, D)`` array of clr rows."""

    rows: np.ndarray
    scheme: str = "custom"

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] < 2 or rows.shape[0] != rows.shape[1] - 1:
            raise DimensionMismatch(f"contrast matrix must be (D-1, D), got {rows.shape}")
        D = rows.shape[1]
        if np.abs(rows.sum(axis=1)).max() > 1e-12:
            raise InputError("contrast rows must sum to zero")
        if np.abs(rows @ rows.T - np.eye(D - 1)).max() > 1e-10:
            raise InputError("contrast rows must be orthonormal")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def D(self):
        return self.rows.shape[1]

    @property
    def dim(self):
        return self.rows.shape[0]

    def __repr__(self):
        return f"ContrastMatrix(D={self.D}, scheme={self.scheme!r})"


def contrast_matrix(D, scheme="helmert_like"):
    """Build a deterministic orthonormal contrast matrix.

    Parameters
    ----------
    D : int
        Number of parts, at least 2.
    scheme : {"helmert_like", "pivot"}
        ``helmert_like`` contrasts each part with the mean of the preceding
        ones (the Gram-Schmidt basis of ``e1 - e2, e1 + e2 - 2 e3, ...``);
        ``pivot`` contrasts each part with the mean of the following ones.
    """
    D = int(D)
    if D < 2:
        raise DimensionMismatch(f"need D >= 2, got {D}")
    rows = np.zeros((D - 1, D))
    if scheme == "helmert_like":
        for i in range(1, D):
            rows[i - 1, :i] = 1.0 / i
            rows[i - 1, i] = -1.0
            rows[i - 1] *= np.sqrt(i / (i + 1.0))
    elif scheme == "pivot":
        for i in range(D - 1):
            rest = D - i - 1
            rows[i, i] = 1.0
            rows[i, i + 1 :] = -1.0 / rest
            rows[i] *= np.sqrt(rest / (rest + 1.0))
    else:
        raise ValueError(f"unknown contrast scheme {scheme!r}")
    return ContrastMatrix(rows, scheme)


def _resolve_psi(psi, D):
    if psi is None:
        return contrast_matrix(D)
    if isinstance(psi, str):
        return contrast_matrix(D, psi)
    if not isinstance(psi, ContrastMatrix):
        psi = ContrastMatrix(psi)
    if psi.D != D:
        raise DimensionMismatch(f"contrast matrix is for D={psi.D}, data has D={D}")
    return psi


def ilr(x, psi=None):
    """Isometric log-ratio coordinates, ``clr(x) @ psi.T``."""
    c = clr(x)
    psi = _resolve_psi(psi, c.shape[-1])
    return c @ psi.rows.T


def ilr_inverse(u, psi=None):
    """Inverse ilr: ``closure(exp(u @ psi))``."""
    u = np.asarray(u, dtype=float)
    psi = _resolve_psi(psi, u.shape[-1] + 1)
    return clr_inverse(u @ psi.rows)


class CompositionSample:
    """``n`` compositions observed over spatial units.

    ``raw`` keeps the values exactly as supplied (zeros allowed); log-ratio
    coordinates are derived lazily and fail with :class:`NonPositivePart`
    naming the offending unit when a zero is still present.

    Parameters
    ----------
    raw : array_like, shape (n, D)
        Nonnegative values, one unit per row.
    ids : sequence, optional
        Unit labels; defaults to ``0 .. n-1``.
    psi : ContrastMatrix or str, optional
        Contrast matrix (or scheme name) used for ``ilr_coords``.
    part_names : sequence of str, optional
    """

    def __init__(self, raw, ids=None, psi=None, part_names=None):
        raw = np.array(raw, dtype=float)
        if raw.ndim != 2:
            raise DimensionMismatch(f"raw must be 2-D (units x parts), got {raw.ndim}-D")
        n, D = raw.shape
        if n < 1 or D < 2:
            raise DimensionMismatch(f"need n >= 1 units and D >= 2 parts, got {raw.shape}")
        ids = list(range(n)) if ids is None else list(ids)
        if len(ids) != n:
            raise DimensionMismatch(f"{len(ids)} ids for {n} rows")
        seen = set()
        for label in ids:
            if label in seen:
                raise DuplicateId(f"duplicate unit id {label!r}")
            seen.add(label)
        for i in range(n):
            row = raw[i]
            if not np.isfinite(row).all():
                raise InputError(f"unit {ids[i]!r}: non-finite value")
            if (row < 0).any():
                raise NegativeValue(f"unit {ids[i]!r}: negative value {row[row < 0][0]!r}")
            if not (row > 0).any():
                raise AllZeroRow(f"unit {ids[i]!r}: all parts are zero")
        raw.setflags(write=False)
        self.raw = raw
        self.ids = ids
        self.psi = _resolve_psi(psi, D)
        self.part_names = (
            [f"part_{j + 1}" for j in range(D)] if part_names is None else list(part_names)
        )
        if len(self.part_names) != D:
            raise DimensionMismatch(f"{len(self.part_names)} part names for {D} parts")

    @property
    def n(self):
        return self.raw.shape[0]

    @property
    def D(self):
        return self.raw.shape[1]

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"CompositionSample(n={self.n}, D={self.D}, psi={self.psi.scheme!r})"

    @cached_property
    def parts(self):
        """Rows closed to sum 1 (zeros, if any, are kept)."""
        out = self.raw / self.raw.sum(axis=1, keepdims=True)
        out.setflags(write=False)
        return out

    def _check_positive(self):
        bad = self.raw < PART_FLOOR
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise NonPositivePart(
                f"unit {self.ids[i]!r} has a zero part ({self.part_names[j]}); "
                "replace zeros before log-ratio transforms"
            )

    @cached_property
    def ilr_coords(self):
        """``(n, D - 1)`` ilr coordinates under ``psi``."""
        self._check_positive()
        out = ilr(self.raw, self.psi)
        out.setflags(write=False)
        return out

    @cached_property
    def centered_ilr(self):
        """ilr coordinates of the centered sample (columns sum to zero)."""
        u = self.ilr_coords
        out = u - u.mean(axis=0)
        out.setflags(write=False)
        return out

    def with_psi(self, psi):
        return CompositionSample(self.raw, self.ids, psi, self.part_names)

    def take(self, order):
        """Sample whose unit ``i`` carries the composition of unit ``order[i]``."""
        order = np.asarray(order, dtype=np.intp)
        return CompositionSample(
            self.raw[order], [self.ids[k] for k in order], self.psi, self.part_names
        )

    def relabel(self, order):
        """Move compositions across units while keeping the unit ids fixed."""
        order = np.asarray(order, dtype=np.intp)
        return CompositionSample(self.raw[order], self.ids, self.psi, self.part_names)


def geometric_center(sample):
    """Closed column-wise geometric mean of the sample."""
    if isinstance(sample, CompositionSample):
        sample._check_positive()
        x = sample.raw
    else:
        x = _positive_parts(np.atleast_2d(sample))
    return closure(np.exp(np.log(x).mean(axis=0)))


def center(sample):
    """Perturb every unit by the inverse of the geometric center."""
    g = geometric_center(sample)
    z = perturb_inverse(sample.raw, np.broadcast_to(g, sample.raw.shape))
    return CompositionSample(z, sample.ids, sample.psi, sample.part_names)


def replace_zeros(raw, delta_policy="fraction_of_min", delta=0.5):
    """Multiplicative replacement of zeros.

    Each zero in column ``j`` becomes ``delta_j``; the nonzero parts of that
    row are shrunk by ``1 - sum(delta_zero) / row_sum`` so that row sums are
    unchanged.

    Parameters
    ----------
    raw : array_like, shape (n, D)
        Nonnegative matrix.
    delta_policy : {"fraction_of_min", "fixed"}
        ``fraction_of_min`` sets ``delta_j = delta * min positive value of
        column j``; ``fixed`` uses ``delta`` for every column.
    delta : float

    Returns
    -------
    numpy.ndarray
        Strictly positive matrix with the same row sums.
    """
    x = np.array(raw, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatch("replace_zeros expects a 2-D matrix")
    if (x < 0).any():
        i, j = np.argwhere(x < 0)[0]
        raise NegativeValue(f"row {i}, column {j}: negative value {x[i, j]!r}")
    rowsum = x.sum(axis=1)
    empty = np.flatnonzero(rowsum <= 0)
    if empty.size:
        raise AllZeroRow(f"row {empty[0]} has no positive entry")
    if not delta > 0:
        raise InputError(f"delta must be positive, got {delta!r}")
    zero = x == 0
    if not zero.any():
        return x
    if delta_policy == "fraction_of_min":
        deltas = np.empty(x.shape[1])
        for j in range(x.shape[1]):
            pos = x[:, j][x[:, j] > 0]
            if pos.size == 0:
                raise InputError(f"column {j} has no positive entry to scale delta from")
            deltas[j] = delta * pos.min()
    elif delta_policy == "fixed":
        deltas = np.full(x.shape[1], float(delta))
    else:
        raise ValueError(f"unknown delta_policy {delta_policy!r}")
    added = (zero * deltas).sum(axis=1)
    shrink = 1.0 - added / rowsum
    if (shrink <= 0).any():
        i = int(np.flatnonzero(shrink <= 0)[0])
        raise InputError(f"row {i}: replacement values exceed the row total")
    return np.where(zero, deltas, x * shrink[:, None])
