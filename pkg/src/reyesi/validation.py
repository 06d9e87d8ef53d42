"""Input validation helpers shared by the estimators."""

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import DimensionMismatch, NegativeValue, NonPositivePart, NotStandardized
from .weights import SpatialWeights, row_standardize


def check_compositions(X, allow_zeros=False):
    """Validate a ``(n, D)`` composition matrix and return it as float.

    Zeros are rejected unless ``allow_zeros``; negatives always are.
    """
    X = check_array(X, dtype=np.float64, ensure_min_features=2)
    if (X < 0).any():
        i, j = np.argwhere(X < 0)[0]
        raise NegativeValue(f"row {i}, part {j}: negative value {X[i, j]!r}")
    if not allow_zeros and (X == 0).any():
        i, j = np.argwhere(X == 0)[0]
        raise NonPositivePart(f"row {i}, part {j} is zero; replace zeros first")
    return X


def check_weights(w, n, standardize=True):
    """Coerce ``w`` to row-standardized :class:`SpatialWeights` for ``n`` units.

    Dense arrays and scipy sparse matrices are accepted and row-standardized
    when ``standardize`` is true.
    """
    if not isinstance(w, SpatialWeights):
        w = SpatialWeights(w)
    if w.n != n:
        raise DimensionMismatch(f"weights have {w.n} units, data has {n} rows")
    if not w.standardized:
        if not standardize:
            raise NotStandardized("weights must be row-standardized")
        w = row_standardize(w)
    return w
