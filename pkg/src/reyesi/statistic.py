"""Reyes's I, its Cauchy-Schwarz bound and randomization moments, plus the
real-valued Moran's I and the componentwise-average baseline I_m.

Everything runs on centered ilr coordinates ``U`` (one row per unit): with
row-standardized weights the statistic is ``tr(U' W U) / tr(U' U)`` and
does not depend on the contrast matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConstantVector, DegenerateSample, DimensionMismatch, NotStandardized, TooFewUnits
from .geometry import CompositionSample
from .weights import weight_summaries

__all__ = [
    "ReyesStatistic",
    "MoranStatistic",
    "SecondMoment",
    "reyes_i",
    "reyes_i_or_bound",
    "upper_bound",
    "expected_value_randomization",
    "second_moment_randomization",
    "reyes_statistic",
    "moran_i",
    "moran_mean",
]

# Relative size below which centered coordinates count as exactly zero.
DEGENERATE_RTOL = 1e-12


def _check_inputs(sample, w):
    if not isinstance(sample, CompositionSample):
        sample = CompositionSample(sample)
    if not w.standardized:
        raise NotStandardized("weights must be row-standardized")
    if w.n != sample.n:
        raise DimensionMismatch(f"weights have {w.n} units, sample has {sample.n}")
    return sample


def _is_degenerate(sample):
    scale = max(1.0, float(np.abs(sample.ilr_coords).max()))
    return float(np.abs(sample.centered_ilr).max()) <= DEGENERATE_RTOL * scale


def _ratio_terms(U, w):
    """Per-unit inner products, lag norms and the total squared norm."""
    lag = w.sparse @ U
    inner = np.einsum("ij,ij->i", U, lag)
    norms = np.sqrt(np.einsum("ij,ij->i", U, U))
    lag_norms = np.sqrt(np.einsum("ij,ij->i", lag, lag))
    return inner, norms, lag_norms


def reyes_i(sample, w):
    """Reyes's I of a composition sample under row-standardized weights.

    Parameters
    ----------
    sample : CompositionSample or array_like, shape (n, D)
    w : SpatialWeights
        Row-standardized, aligned with the sample's units.

    Returns
    -------
    float

    Raises
    ------
    DegenerateSample
        When all compositions coincide (up to closure), which makes the
        statistic 0/0.
    """
    sample = _check_inputs(sample, w)
    if _is_degenerate(sample):
        raise DegenerateSample("all compositions are identical; Reyes's I is undefined")
    U = sample.centered_ilr
    inner, norms, _ = _ratio_terms(U, w)
    total = math.fsum(norms**2)
    return (w.n / w.s0) * math.fsum(inner) / total


def upper_bound(sample, w):
    """Cauchy-Schwarz bound ``sum ||z_i|| ||lag z_i|| / sum ||z_k||^2``."""
    sample = _check_inputs(sample, w)
    if _is_degenerate(sample):
        raise DegenerateSample("all compositions are identical; the bound is undefined")
    _, norms, lag_norms = _ratio_terms(sample.centered_ilr, w)
    return (w.n / w.s0) * math.fsum(norms * lag_norms) / math.fsum(norms**2)


def reyes_i_or_bound(sample, w):
    """Return ``(value, bound)``, defined also for identical compositions.

    For a degenerate sample every centered composition collapses onto the
    common composition, so both quantities are evaluated on the uncentered
    coordinates (a neutral common composition is replaced by an arbitrary
    unit direction). With row-standardized weights both equal 1, the
    saturating case of the bound.
    """
    sample = _check_inputs(sample, w)
    if not _is_degenerate(sample):
        return reyes_i(sample, w), upper_bound(sample, w)
    U = np.array(sample.ilr_coords)
    if float(np.abs(U).max()) == 0.0:
        U[:, 0] = 1.0
    inner, norms, lag_norms = _ratio_terms(U, w)
    total = math.fsum(norms**2)
    scale = w.n / w.s0
    return scale * math.fsum(inner) / total, scale * math.fsum(norms * lag_norms) / total


def expected_value_randomization(n):
    """Randomization mean of Reyes's I, ``-1 / (n - 1)``."""
    n = int(n)
    if n < 2:
        raise TooFewUnits(f"need n >= 2, got {n}")
    return -1.0 / (n - 1)


@dataclass(frozen=True)
class SecondMoment:
    """Noncentral randomization second moment with its ingredients.

    ``m`` is the mean squared norm of the centered coordinates, ``m4`` the
    mean of squared squared-norms and ``tr_m2sq`` the trace of the squared
    empirical second-moment matrix.
    """

    e_r2: float
    m: float
    m4: float
    tr_m2sq: float
    formula: str


def _coordinate_moments(U):
    n = U.shape[0]
    sq = np.einsum("ij,ij->i", U, U)
    m2 = U.T @ U / n
    m = math.fsum(sq) / n
    m4 = math.fsum(sq**2) / n
    tr_m2sq = math.fsum((m2 * m2).ravel())
    return m, m4, tr_m2sq


def _pair_expectations(n, m, m4, tr_m2sq):
    """Randomization expectations of products of inner products between
    units at distinct locations: same pair twice, one shared unit, and two
    disjoint pairs."""
    same = (n * tr_m2sq - m4) / (n - 1)
    shared = (2 * m4 - n * tr_m2sq) / ((n - 1) * (n - 2))
    disjoint = (2 * n * tr_m2sq + n * m * m - 6 * m4) / ((n - 1) * (n - 2) * (n - 3))
    return same, shared, disjoint


def second_moment_randomization(sample, w, formula="printed"):
    """Noncentral second moment of Reyes's I under randomization.

    Parameters
    ----------
    sample : CompositionSample
    w : SpatialWeights
        Row-standardized.
    formula : {"printed", "corrected"}
        ``printed`` assembles the published closed form term by term, with
        ``E(A_i A_j) = T4 (1 - c_ij - w_ji) + T3 c_ij`` for every pair.
        That expression omits the shared-unit and same-pair terms arising
        when ``i`` and ``j`` are neighbors, so it disagrees with exact
        enumeration whenever the weights have edges (see
        :mod:`reyesi.diagnostics`). ``corrected`` counts all overlap
        classes of the index pairs,
        ``E(S^2) = S1 T2 + (S2 - 2 S1) T3 + (S0^2 + S1 - S2) T4``,
        and matches enumeration to rounding error.

    Returns
    -------
    SecondMoment
    """
    sample = _check_inputs(sample, w)
    n = sample.n
    if n < 4:
        raise TooFewUnits(f"the second moment needs n >= 4 units, got {n}")
    if _is_degenerate(sample):
        raise DegenerateSample("all compositions are identical; moments are undefined")
    m, m4, tr_m2sq = _coordinate_moments(sample.centered_ilr)
    same, shared, disjoint = _pair_expectations(n, m, m4, tr_m2sq)
    summ = weight_summaries(w)
    s0 = summ.s0
    if formula == "printed":
        c_total = math.fsum(summ.c)
        cross_total = summ.cross_total()
        sum_ai2 = same * c_total + shared * (n - c_total)
        sum_aiaj = disjoint * (n * (n - 1) - cross_total - s0) + shared * cross_total
        e_s2 = sum_ai2 + sum_aiaj
    elif formula == "corrected":
        ws = w.sparse
        sym = ws + ws.T
        s1 = 0.5 * math.fsum(sym.multiply(sym).data)
        deg = np.asarray(ws.sum(axis=1)).ravel() + np.asarray(ws.sum(axis=0)).ravel()
        s2 = math.fsum(deg**2)
        e_s2 = math.fsum(
            [s1 * same, (s2 - 2 * s1) * shared, (s0 * s0 + s1 - s2) * disjoint]
        )
    else:
        raise ValueError(f"unknown formula {formula!r}")
    # I = S / (S0 m); with row-standardized weights S0 = n.
    return SecondMoment(e_s2 / (s0 * m) ** 2, m, m4, tr_m2sq, formula)


@dataclass(frozen=True)
class ReyesStatistic:
    """Observed Reyes's I with its bound and randomization moments.

    ``e_r2`` and ``var_r`` use the corrected second moment; the published
    closed form is kept in ``e_r2_printed`` for comparison. Moments are NaN
    when ``n < 4``.
    """

    value: float
    upper_bound: float
    e_r: float
    e_r2: float
    var_r: float
    n: int
    D: int
    e_r2_printed: float = float("nan")
    diagnostics: dict = field(default_factory=dict)

    @property
    def z_score(self):
        if not self.var_r > 0:
            return float("nan")
        return (self.value - self.e_r) / math.sqrt(self.var_r)

    def to_dict(self):
        return {
            "value": self.value,
            "upper_bound": self.upper_bound,
            "e_r": self.e_r,
            "e_r2": self.e_r2,
            "var_r": self.var_r,
            "e_r2_printed": self.e_r2_printed,
            "z_score": self.z_score,
            "n": self.n,
            "D": self.D,
            "diagnostics": dict(self.diagnostics),
        }


def reyes_statistic(sample, w):
    """Compute the value, bound and moments in one pass."""
    sample = _check_inputs(sample, w)
    value = reyes_i(sample, w)
    bound = upper_bound(sample, w)
    n = sample.n
    e_r = expected_value_randomization(n)
    e_r2 = e_r2_printed = var_r = float("nan")
    diagnostics = {}
    if n >= 4:
        corrected = second_moment_randomization(sample, w, "corrected")
        printed = second_moment_randomization(sample, w, "printed")
        e_r2, e_r2_printed = corrected.e_r2, printed.e_r2
        var_r = e_r2 - e_r * e_r
        diagnostics = {"m": corrected.m, "m4": corrected.m4, "tr_m2sq": corrected.tr_m2sq}
    return ReyesStatistic(value, bound, e_r, e_r2, var_r, n, sample.D, e_r2_printed, diagnostics)


def moran_i(values, w):
    """Moran's I of a real variable, ``n / S0 * z'Wz / z'z``.

    Raises
    ------
    ConstantVector
        If all values are equal.
    """
    x = np.asarray(values, dtype=float).ravel()
    if not w.standardized:
        raise NotStandardized("weights must be row-standardized")
    if x.size != w.n:
        raise DimensionMismatch(f"weights have {w.n} units, got {x.size} values")
    z = x - x.mean()
    scale = max(1.0, float(np.abs(x).max()))
    if float(np.abs(z).max()) <= DEGENERATE_RTOL * scale:
        raise ConstantVector("values are constant; Moran's I is undefined")
    lag = w.sparse @ z
    return (w.n / w.s0) * math.fsum(z * lag) / math.fsum(z * z)


@dataclass(frozen=True)
class MoranStatistic:
    value: float
    component_values: tuple


def moran_mean(sample, w):
    """Average of componentwise Moran's I computed on closed proportions."""
    if not isinstance(sample, CompositionSample):
        sample = CompositionSample(sample)
    vals = []
    for j in range(sample.D):
        try:
            vals.append(moran_i(sample.parts[:, j], w))
        except ConstantVector as exc:
            raise ConstantVector(
                f"component {j} ({sample.part_names[j]}) is constant", component=j
            ) from exc
    return MoranStatistic(math.fsum(vals) / len(vals), tuple(vals))
