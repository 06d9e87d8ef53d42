"""scikit-learn style front end.

Transformers (:class:`CLRTransformer`, :class:`ILRTransformer`,
:class:`MultiplicativeReplacement`) compose in a ``Pipeline``; the spatial
statistics are estimators whose ``fit`` computes the statistic and its
randomization inference and stores the results in trailing-underscore
attributes, so ``get_params`` / ``clone`` work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, OneToOneFeatureMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import geometry
from .geometry import CompositionSample, contrast_matrix
from .inference import critical_values, exact_distribution, monte_carlo_distribution, p_values
from .statistic import moran_mean, reyes_statistic
from .validation import check_compositions, check_weights


class CLRTransformer(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Centered log-ratio transform (stateless)."""

    def fit(self, X, y=None):
        X = check_compositions(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self)
        return geometry.clr(check_compositions(X))

    def inverse_transform(self, X):
        check_is_fitted(self)
        return geometry.clr_inverse(np.asarray(X, dtype=float))


class ILRTransformer(TransformerMixin, BaseEstimator):
    """Isometric log-ratio transform.

    Parameters
    ----------
    scheme : {"helmert_like", "pivot"}
        Contrast matrix construction.

    Attributes
    ----------
    psi_ : ContrastMatrix
    n_features_in_ : int
    """

    def __init__(self, scheme="helmert_like"):
        self.scheme = scheme

    def fit(self, X, y=None):
        X = check_compositions(X)
        self.n_features_in_ = X.shape[1]
        self.psi_ = contrast_matrix(X.shape[1], self.scheme)
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_compositions(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} parts, got {X.shape[1]}")
        return geometry.ilr(X, self.psi_)

    def inverse_transform(self, X):
        check_is_fitted(self)
        return geometry.ilr_inverse(np.asarray(X, dtype=float), self.psi_)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self)
        return np.array([f"ilr{k + 1}" for k in range(self.n_features_in_ - 1)], dtype=object)


class MultiplicativeReplacement(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Replace zeros by small positive values while keeping row totals.

    With ``delta_policy="fraction_of_min"`` the replacement value for each
    column is learned at ``fit`` time as ``delta`` times the smallest
    positive entry of that column.
    """

    def __init__(self, delta_policy="fraction_of_min", delta=0.5):
        self.delta_policy = delta_policy
        self.delta = delta

    def fit(self, X, y=None):
        X = check_compositions(X, allow_zeros=True)
        self.n_features_in_ = X.shape[1]
        if self.delta_policy == "fraction_of_min":
            mins = np.array([X[X[:, j] > 0, j].min() if (X[:, j] > 0).any() else np.nan
                             for j in range(X.shape[1])])
            self.deltas_ = self.delta * mins
        elif self.delta_policy == "fixed":
            self.deltas_ = np.full(X.shape[1], float(self.delta))
        else:
            raise ValueError(f"unknown delta_policy {self.delta_policy!r}")
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_compositions(X, allow_zeros=True)
        zero = X == 0
        used = zero.any(axis=0)
        if np.isnan(self.deltas_[used]).any():
            raise ValueError("a column with zeros had no positive entries at fit time")
        deltas = np.where(np.isnan(self.deltas_), 0.0, self.deltas_)
        return _replace_with(X, deltas)


def _replace_with(X, deltas):
    zero = X == 0
    if not zero.any():
        return X.copy()
    rowsum = X.sum(axis=1)
    shrink = 1.0 - (zero * deltas).sum(axis=1) / rowsum
    if (shrink <= 0).any():
        raise ValueError("replacement values exceed a row total")
    return np.where(zero, deltas, X * shrink[:, None])


class ReyesI(BaseEstimator):
    """Reyes's I with randomization inference.

    Parameters
    ----------
    weights : SpatialWeights or array_like
        Spatial weights aligned with the rows passed to ``fit``; rows are
        standardized if needed.
    permutations : int
        Number of Monte Carlo relabelings (ignored when ``method="exact"``).
    method : {"monte_carlo", "exact"}
    seed : int
        Master seed of the Monte Carlo streams.
    correction : {"raw", "plus_one"}
    contrast : {"helmert_like", "pivot"}
    exact_cap : int
        Largest ``n`` allowed for exact enumeration.
    n_jobs : int
        Worker threads for the permutation loop; results do not depend on it.

    Attributes
    ----------
    I_ : float
        Observed statistic.
    upper_bound_ : float
    EI_ : float
        Randomization mean, ``-1 / (n - 1)``.
    VI_ : float
        Randomization variance.
    z_ : float
        Standardized statistic, ``(I_ - EI_) / sqrt(VI_)``.
    statistic_ : ReyesStatistic
    distribution_ : PermutationDistribution
    p_values_ : PValueReport
    p_sim_ : float
        One-sided p-value for positive autocorrelation.
    """

    def __init__(self, weights=None, *, permutations=999, method="monte_carlo", seed=0,
                 correction="raw", contrast="helmert_like", exact_cap=9, n_jobs=1):
        self.weights = weights
        self.permutations = permutations
        self.method = method
        self.seed = seed
        self.correction = correction
        self.contrast = contrast
        self.exact_cap = exact_cap
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = check_compositions(X)
        w = check_weights(self.weights, X.shape[0])
        sample = CompositionSample(X, psi=self.contrast)
        self.n_features_in_ = X.shape[1]
        self.weights_ = w
        self.statistic_ = stat = reyes_statistic(sample, w)
        self.I_ = stat.value
        self.upper_bound_ = stat.upper_bound
        self.EI_ = stat.e_r
        self.VI_ = stat.var_r
        self.z_ = stat.z_score
        if self.method == "exact":
            dist = exact_distribution(sample, w, cap=self.exact_cap, workers=self.n_jobs)
        elif self.method == "monte_carlo":
            dist = monte_carlo_distribution(sample, w, self.permutations, self.seed, workers=self.n_jobs)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.distribution_ = dist
        self.p_values_ = p_values(dist, self.correction)
        self.p_sim_ = self.p_values_.p_pos
        return self

    def critical_values(self, alpha=0.05):
        check_is_fitted(self)
        return critical_values(self.distribution_, alpha)


class MoranMean(BaseEstimator):
    """Average of componentwise Moran's I with randomization inference.

    Parameters mirror :class:`ReyesI`. Attributes: ``I_``,
    ``component_I_``, ``distribution_``, ``p_values_``, ``p_sim_``.
    """

    def __init__(self, weights=None, *, permutations=999, method="monte_carlo", seed=0,
                 correction="raw", exact_cap=9, n_jobs=1):
        self.weights = weights
        self.permutations = permutations
        self.method = method
        self.seed = seed
        self.correction = correction
        self.exact_cap = exact_cap
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = check_compositions(X, allow_zeros=True)
        w = check_weights(self.weights, X.shape[0])
        sample = CompositionSample(X)
        self.n_features_in_ = X.shape[1]
        self.weights_ = w
        stat = moran_mean(sample, w)
        self.I_ = stat.value
        self.component_I_ = np.array(stat.component_values)
        if self.method == "exact":
            dist = exact_distribution(sample, w, self.exact_cap, "moran_mean", self.n_jobs)
        elif self.method == "monte_carlo":
            dist = monte_carlo_distribution(sample, w, self.permutations, self.seed, "moran_mean", self.n_jobs)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.distribution_ = dist
        self.p_values_ = p_values(dist, self.correction)
        self.p_sim_ = self.p_values_.p_pos
        return self
