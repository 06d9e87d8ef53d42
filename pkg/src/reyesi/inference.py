"""Exact and Monte Carlo randomization distributions and p-values.

Both Reyes's I and the componentwise Moran average are quadratic forms in
the relabeled sample, ``n/S0 * sum_e w_e K[pi(r_e), pi(c_e)]`` over the
stored weight entries ``e = (r_e, c_e)``, with a fixed ``n x n`` kernel
``K``. Evaluating one relabeling is therefore a gather over the nonzeros of
``W``; the kernel, and every denominator, is computed once.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import ConstantVector, EmptyDistribution, InputError, TooManyUnits
from .geometry import CompositionSample
from .statistic import DEGENERATE_RTOL, _check_inputs, _is_degenerate

__all__ = [
    "BLOCK_SIZE",
    "PermutationKernel",
    "PermutationDistribution",
    "PValueReport",
    "permutation_kernel",
    "exact_distribution",
    "monte_carlo_distribution",
    "p_values",
    "critical_values",
    "block_generator",
]

# Draws per RNG substream. Fixed so the output never depends on scheduling.
BLOCK_SIZE = 1024
# Above this many units the dense n x n kernel is replaced by a gather on
# the coordinate matrix.
GRAM_MAX_UNITS = 1500
STATISTICS = ("reyes", "moran_mean")


class PermutationKernel:
    """Evaluates a statistic on batches of relabelings.

    The kernel is ``F diag(g) F'`` for a feature matrix ``F`` (n x q) and
    column weights ``g``; it is materialized as a dense Gram matrix when
    ``n`` is small enough.
    """

    def __init__(self, features, column_weights, w):
        self.features = np.ascontiguousarray(features, dtype=float)
        self.column_weights = np.asarray(column_weights, dtype=float)
        self.rows, self.cols, self.vals = w.edges()
        self.scale = w.n / w.s0
        self.n = w.n
        if self.n <= GRAM_MAX_UNITS:
            self.gram = (self.features * self.column_weights) @ self.features.T
        else:
            self.gram = None

    def evaluate(self, perms):
        """Statistic for each row of ``perms`` (shape ``(b, n)``)."""
        perms = np.atleast_2d(np.asarray(perms, dtype=np.intp))
        pr = perms[:, self.rows]
        pc = perms[:, self.cols]
        if self.gram is not None:
            terms = self.gram[pr, pc]
        else:
            fr = self.features[pr] * self.column_weights
            terms = np.einsum("bek,bek->be", fr, self.features[pc])
        # Strictly sequential accumulation over the edges. Pairwise or BLAS
        # reductions group terms differently for different batch shapes,
        # and a relabeling's value must not depend on the batch it is in.
        return self.scale * np.cumsum(terms * self.vals, axis=1)[:, -1]

    def identity_value(self):
        return float(self.evaluate(np.arange(self.n)[None, :])[0])


def permutation_kernel(sample, w, statistic="reyes"):
    """Build the kernel of ``statistic`` for a sample and weights.

    Parameters
    ----------
    statistic : {"reyes", "moran_mean"}

    A sample of identical compositions yields the constant distribution at
    the saturating value 1 rather than an error; :func:`reyes_i` itself
    still refuses such samples.
    """
    sample = _check_inputs(sample, w)
    if statistic == "reyes":
        if _is_degenerate(sample):
            # identical compositions: same limiting convention as
            # reyes_i_or_bound, so every relabeling evaluates to 1
            U = np.array(sample.ilr_coords)
            if float(np.abs(U).max()) == 0.0:
                U[:, 0] = 1.0
        else:
            U = sample.centered_ilr
        total = math.fsum(np.einsum("ij,ij->i", U, U))
        return PermutationKernel(U, np.full(U.shape[1], 1.0 / total), w)
    if statistic == "moran_mean":
        X = sample.parts
        Z = X - X.mean(axis=0)
        ss = np.einsum("ij,ij->j", Z, Z)
        scale = np.maximum(1.0, np.abs(X).max(axis=0))
        flat = np.abs(Z).max(axis=0) <= DEGENERATE_RTOL * scale
        if flat.any():
            j = int(np.flatnonzero(flat)[0])
            raise ConstantVector(f"component {j} is constant", component=j)
        return PermutationKernel(Z, 1.0 / (sample.D * ss), w)
    raise ValueError(f"statistic must be one of {STATISTICS}, got {statistic!r}")


@dataclass(frozen=True, eq=False)
class PermutationDistribution:
    """Randomization values of a statistic.

    ``observed`` is the identity relabeling evaluated on the same code path
    as ``values``, so genuine ties are bit-equal.
    """

    values: np.ndarray
    mode: str
    B: int
    observed: float
    seed: int | None = None
    statistic: str = "reyes"

    @property
    def mean(self):
        return math.fsum(self.values) / self.values.size

    @property
    def sd(self):
        return float(np.std(self.values, ddof=1)) if self.values.size > 1 else 0.0

    def summary(self, quantiles=(0.01, 0.05, 0.5, 0.95, 0.99)):
        v = np.sort(self.values)
        return {
            "mean": self.mean,
            "sd": self.sd,
            "min": float(v[0]),
            "max": float(v[-1]),
            "quantiles": {f"{q:g}": _nearest_rank(v, q) for q in quantiles},
        }


def exact_distribution(sample, w, cap=9, statistic="reyes", workers=1):
    """All ``n!`` relabelings of the units, in lexicographic order.

    The first value is the identity (observed) arrangement.

    Raises
    ------
    TooManyUnits
        If ``n`` exceeds ``cap``.
    """
    kernel = permutation_kernel(sample, w, statistic)
    n = kernel.n
    if n > cap:
        raise TooManyUnits(
            f"exact enumeration of {n}! relabelings exceeds the cap of {cap}! ({math.factorial(cap)})"
        )
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp).reshape(-1, n)
    chunks = np.array_split(perms, max(1, len(perms) // 40320))
    values = np.concatenate(_map(kernel.evaluate, chunks, workers))
    return PermutationDistribution(values, "exact", len(values), kernel.identity_value(), None, statistic)


def block_generator(seed, block):
    """Independent Philox stream for draw block ``block`` under ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def _draw_block(n, seed, block, size):
    rng = block_generator(seed, block)
    return rng.permuted(np.tile(np.arange(n, dtype=np.intp), (size, 1)), axis=1)


def monte_carlo_distribution(sample, w, B, seed, statistic="reyes", workers=1):
    """``B`` uniformly random relabelings.

    Draw ``i`` belongs to block ``i // BLOCK_SIZE``; each block has its own
    counter-based stream derived from ``(seed, block)`` and permutations are
    produced by a Fisher-Yates shuffle. Blocks are evaluated in parallel and
    reassembled in draw order, so the values are bit-identical for any
    ``workers``.
    """
    B = int(B)
    if B < 1:
        raise InputError(f"B must be >= 1, got {B}")
    if not 0 <= int(seed) < 2**64:
        raise InputError(f"seed must be an unsigned 64-bit integer, got {seed}")
    kernel = permutation_kernel(sample, w, statistic)
    n = kernel.n
    blocks = [(k, min(BLOCK_SIZE, B - k * BLOCK_SIZE)) for k in range(-(-B // BLOCK_SIZE))]

    def run(spec):
        k, size = spec
        return kernel.evaluate(_draw_block(n, seed, k, size))

    values = np.concatenate(_map(run, blocks, workers))
    return PermutationDistribution(values, "monte_carlo", B, kernel.identity_value(), int(seed), statistic)


def _map(fn, items, workers):
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=int(workers)) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class PValueReport:
    p_pos: float
    p_neg: float
    p_two: float
    se: float
    correction: str

    def to_dict(self):
        return {
            "p_pos": self.p_pos,
            "p_neg": self.p_neg,
            "p_two": self.p_two,
            "se": self.se,
            "correction": self.correction,
        }


def p_values(dist, correction="raw", observed=None):
    """One- and two-sided randomization p-values.

    Ties are compared exactly (no tolerance). ``raw`` returns the
    proportion ``m / B`` of values at least as extreme; ``plus_one`` returns
    ``(m + 1) / (B + 1)``. The two-sided value doubles the smaller tail and
    is truncated at one. ``se`` is the binomial standard error of ``p_pos``
    for Monte Carlo distributions and 0 for exact ones.
    """
    values = np.asarray(dist.values)
    if values.size == 0:
        raise EmptyDistribution("distribution has no values")
    obs = dist.observed if observed is None else observed
    B = values.size
    m_pos = int(np.count_nonzero(values >= obs))
    m_neg = int(np.count_nonzero(values <= obs))
    if correction == "raw":
        p_pos, p_neg = m_pos / B, m_neg / B
    elif correction == "plus_one":
        p_pos, p_neg = (m_pos + 1) / (B + 1), (m_neg + 1) / (B + 1)
    else:
        raise ValueError(f"unknown correction {correction!r}")
    p_two = min(1.0, 2.0 * min(p_pos, p_neg))
    se = math.sqrt(p_pos * (1.0 - p_pos) / B) if dist.mode == "monte_carlo" else 0.0
    return PValueReport(p_pos, p_neg, p_two, se, correction)


def _nearest_rank(sorted_values, q):
    N = len(sorted_values)
    rank = math.ceil(q * N - 1e-9)
    return float(sorted_values[min(max(rank, 1), N) - 1])


def critical_values(dist, alpha):
    """Nearest-rank empirical ``alpha`` and ``1 - alpha`` quantiles."""
    if not 0 < alpha < 1:
        raise InputError(f"alpha must lie in (0, 1), got {alpha!r}")
    values = np.sort(np.asarray(dist.values if hasattr(dist, "values") else dist, dtype=float))
    if values.size == 0:
        raise EmptyDistribution("distribution has no values")
    return {"lower": _nearest_rank(values, alpha), "upper": _nearest_rank(values, 1 - alpha)}
