"""Simulation harness for identical, independent and SAR-correlated
compositions on square lattices.

Every replication owns RNG substreams derived from
``(master_seed, replication)``, so results are reproducible bit for bit and
do not depend on how replications are scheduled.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import sparse, stats
from scipy.sparse.linalg import splu

from .exceptions import ConstantVector, InputError, NotPositiveDefinite, NotStandardized, SingularSystem
from .geometry import CompositionSample, contrast_matrix, ilr_inverse
from .inference import monte_carlo_distribution, p_values
from .statistic import moran_mean, reyes_i, reyes_i_or_bound, upper_bound
from .weights import lattice_weights, row_standardize

__all__ = [
    "CovarianceSpec",
    "ScenarioConfig",
    "ScenarioResult",
    "RECORD_FIELDS",
    "make_covariance",
    "logistic_normal_sample",
    "sar_sample",
    "run_case1",
    "run_case2",
    "run_case3",
    "run_scenario",
    "sar_rho_sweep",
]

RECORD_FIELDS = ("replication", "I_a", "upper_bound", "I_m", "p_a", "p_m", "time_a_ns", "time_m_ns")
COVARIANCE_KINDS = ("identity", "exchangeable", "wishart_toeplitz")


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class CovarianceSpec:
    """Covariance of the normal draws in ilr space (``dim = D - 1``).

    ``dof`` defaults to ``dim + 2`` (that is, ``D + 1``).
    """

    kind: str = "identity"
    dim: int = 2
    rho1: float = 0.5
    toeplitz_rho: float = 0.5
    dof: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in COVARIANCE_KINDS:
            raise InputError(f"covariance kind must be one of {COVARIANCE_KINDS}, got {self.kind!r}")
        if self.dim < 1:
            raise InputError(f"dim must be >= 1, got {self.dim}")
        if self.kind == "exchangeable" and self.dim > 1:
            lo = -1.0 / (self.dim - 1)
            if not lo < self.rho1 < 1:
                raise NotPositiveDefinite(
                    f"exchangeable rho1={self.rho1} must lie in ({lo:.6g}, 1) for dim={self.dim}"
                )
        if self.kind == "wishart_toeplitz":
            if not -1 < self.toeplitz_rho < 1:
                raise NotPositiveDefinite("toeplitz_rho must lie in (-1, 1)")
            if self.degrees_of_freedom < self.dim:
                raise NotPositiveDefinite(f"dof must be >= dim={self.dim}")

    @property
    def degrees_of_freedom(self):
        return self.dim + 2 if self.dof is None else int(self.dof)

    def toeplitz(self):
        idx = np.arange(self.dim)
        return self.toeplitz_rho ** np.abs(idx[:, None] - idx[None, :])


def make_covariance(spec, rng=None):
    """Realize the covariance matrix described by ``spec``.

    ``wishart_toeplitz`` draws ``Wishart(dof, T) / dof`` whose mean is the
    Toeplitz matrix ``T``; ``rng`` overrides ``spec.seed`` for that draw.
    """
    if spec.kind == "identity":
        sigma = np.eye(spec.dim)
    elif spec.kind == "exchangeable":
        sigma = np.full((spec.dim, spec.dim), float(spec.rho1))
        np.fill_diagonal(sigma, 1.0)
    else:
        dof = spec.degrees_of_freedom
        draw = stats.wishart(df=dof, scale=spec.toeplitz()).rvs(
            random_state=_rng(spec.seed if rng is None else rng)
        )
        sigma = np.atleast_2d(draw) / dof
        sigma = 0.5 * (sigma + sigma.T)
    _cholesky(sigma)
    return sigma


def _cholesky(sigma):
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("covariance matrix is not positive definite") from exc


def _normal_rows(n, sigma, rng):
    L = _cholesky(np.asarray(sigma, dtype=float))
    return rng.standard_normal((n, L.shape[0])) @ L.T


def logistic_normal_sample(n, D, sigma, psi=None, seed=None):
    """``n`` independent logistic-normal compositions centered at the
    neutral element, drawn as ``N(0, sigma)`` ilr coordinates."""
    psi = contrast_matrix(D) if psi is None else psi
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.shape != (D - 1, D - 1):
        raise InputError(f"sigma must be {(D - 1, D - 1)}, got {sigma.shape}")
    coords = _normal_rows(n, sigma, _rng(seed))
    return CompositionSample(ilr_inverse(coords, psi), psi=psi)


def sar_sample(w, rho, sigma, psi=None, seed=None, return_coords=False):
    """Compositions from the SAR process ``(I - rho W) Y = E`` mapped
    row-wise through the inverse ilr.

    With ``rho = 0`` the draw coincides with :func:`logistic_normal_sample`
    for the same seed and ``sigma``.
    """
    if not w.standardized:
        raise NotStandardized("SAR simulation needs row-standardized weights")
    if not -1 < rho < 1:
        raise InputError(f"rho must lie in (-1, 1), got {rho}")
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    D = sigma.shape[0] + 1
    psi = contrast_matrix(D) if psi is None else psi
    E = _normal_rows(w.n, sigma, _rng(seed))
    if rho == 0:
        Y = E
    else:
        A = (sparse.identity(w.n, format="csc") - rho * w.sparse).tocsc()
        try:
            Y = splu(A).solve(E)
        except RuntimeError as exc:
            raise SingularSystem("I - rho W is singular") from exc
        resid = np.abs(A @ Y - E).max()
        if not np.isfinite(resid) or resid > 1e-10 * max(1.0, np.abs(E).max()):
            raise SingularSystem(f"SAR solve residual {resid:.3g} too large")
    sample = CompositionSample(ilr_inverse(Y, psi), psi=psi)
    return (sample, Y, E) if return_coords else sample


@dataclass(frozen=True)
class ScenarioConfig:
    case: str = "independent"
    grid: tuple = (3, 3)
    D: int = 3
    contiguity: str = "queen"
    covariance: CovarianceSpec = field(default_factory=CovarianceSpec)
    rho_sar: float = 0.0
    replications: int = 100
    B: int = 10_000
    alpha: float = 0.05
    master_seed: int = 0

    def __post_init__(self):
        if self.case not in ("identical", "independent", "sar"):
            raise InputError(f"case must be identical, independent or sar, got {self.case!r}")
        if self.replications < 1:
            raise InputError("replications must be >= 1")
        if self.case == "sar" and not -1 < self.rho_sar < 1:
            raise InputError(f"rho_sar must lie in (-1, 1), got {self.rho_sar}")
        if self.covariance.dim != self.D - 1:
            raise InputError(f"covariance dim {self.covariance.dim} must equal D - 1 = {self.D - 1}")
        if self.contiguity not in ("queen", "rook"):
            raise InputError(f"contiguity must be queen or rook, got {self.contiguity!r}")
        if not 0 < self.alpha < 1:
            raise InputError("alpha must lie in (0, 1)")
        if self.B < 1:
            raise InputError("B must be >= 1")
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        D = int(data.get("D", 3))
        cov = data.pop("covariance", {}) or {}
        if isinstance(cov, str):
            cov = {"kind": cov}
        cov = CovarianceSpec(**{"dim": D - 1, **cov})
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise InputError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(covariance=cov, **data)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        out = asdict(self)
        out["grid"] = list(self.grid)
        return out

    def weights(self):
        rows, cols = self.grid
        return row_standardize(lattice_weights(rows, cols, self.contiguity))


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    records: list
    aggregates: dict

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            write_records(fh, self.records)

    def summary(self):
        return {"config": self.config.to_dict(), "aggregates": self.aggregates}


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_records(fh, records):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(RECORD_FIELDS)
    for rec in records:
        writer.writerow([_fmt(rec[k]) for k in RECORD_FIELDS])


def _streams(master_seed, rep):
    root = np.random.SeedSequence(int(master_seed), spawn_key=(int(rep),))
    data, cov, mc_a, mc_m = root.spawn(4)
    u64 = lambda s: int(s.generate_state(1, np.uint64)[0])  # noqa: E731
    return np.random.default_rng(data), np.random.default_rng(cov), u64(mc_a), u64(mc_m)


def _sigma_for(config, cov_rng):
    spec = config.covariance
    return make_covariance(spec, cov_rng if spec.kind == "wishart_toeplitz" else None)


def _timed(fn, record_timing):
    t0 = time.perf_counter_ns()
    out = fn()
    elapsed = time.perf_counter_ns() - t0
    return out, (elapsed if record_timing else 0)


def _replicate(config, w, psi, rep, record_timing):
    data_rng, cov_rng, seed_a, seed_m = _streams(config.master_seed, rep)
    sigma = _sigma_for(config, cov_rng)
    nan = float("nan")
    if config.case == "identical":
        one = _normal_rows(1, sigma, data_rng)
        sample = CompositionSample(np.repeat(ilr_inverse(one, psi), w.n, axis=0), psi=psi)
        (value, bound), t_a = _timed(lambda: reyes_i_or_bound(sample, w), record_timing)
        return {
            "replication": rep, "I_a": value, "upper_bound": bound, "I_m": nan,
            "p_a": nan, "p_m": nan, "time_a_ns": t_a, "time_m_ns": 0,
        }
    if config.case == "independent":
        sample = logistic_normal_sample(w.n, config.D, sigma, psi, data_rng)
    else:
        sample = sar_sample(w, config.rho_sar, sigma, psi, data_rng)

    def stat_a():
        value = reyes_i(sample, w)
        dist = monte_carlo_distribution(sample, w, config.B, seed_a, "reyes")
        return value, p_values(dist).p_pos

    def stat_m():
        # Extreme draws can round a part to the same proportion in every
        # unit; I_m is then undefined while I_a, built on log-ratios, is not.
        try:
            value = moran_mean(sample, w).value
        except ConstantVector:
            return nan, nan
        dist = monte_carlo_distribution(sample, w, config.B, seed_m, "moran_mean")
        return value, p_values(dist).p_pos

    (I_a, p_a), t_a = _timed(stat_a, record_timing)
    (I_m, p_m), t_m = _timed(stat_m, record_timing)
    return {
        "replication": rep, "I_a": I_a, "upper_bound": upper_bound(sample, w), "I_m": I_m,
        "p_a": p_a, "p_m": p_m, "time_a_ns": t_a, "time_m_ns": t_m,
    }


def _mean_sd(x):
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    if x.size == 0:
        return float("nan"), float("nan")
    sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return math.fsum(x) / x.size, sd


def _aggregate(config, records):
    R = len(records)
    agg = {"replications": R, "n_units": config.grid[0] * config.grid[1]}
    for key in ("I_a", "I_m", "upper_bound"):
        agg[f"mean_{key}"], agg[f"sd_{key}"] = _mean_sd([r[key] for r in records])
    if config.case == "identical":
        gaps = [abs(r["I_a"] - r["upper_bound"]) for r in records]
        agg["saturation_rate"] = sum(g <= 1e-10 for g in gaps) / R
        agg["max_bound_gap"] = max(gaps)
    else:
        defined_m = [r for r in records if math.isfinite(r["I_m"])]
        agg["rejection_rate_a"] = sum(r["p_a"] < config.alpha for r in records) / R
        agg["rejection_rate_m"] = (
            sum(r["p_m"] < config.alpha for r in defined_m) / len(defined_m) if defined_m else float("nan")
        )
        agg["I_m_undefined"] = R - len(defined_m)
        pairs = np.array([[r["I_a"], r["I_m"]] for r in defined_m]).reshape(-1, 2)
        agg["corr_I_a_I_m"] = float(np.corrcoef(pairs.T)[0, 1]) if len(pairs) > 1 else float("nan")
    agg["bound_violations"] = sum(abs(r["I_a"]) > r["upper_bound"] + 1e-10 for r in records)
    return agg


def run_scenario(config, workers=1, record_timing=True):
    """Run all replications of a scenario.

    Parameters
    ----------
    config : ScenarioConfig
    workers : int
        Threads used for replications; results do not depend on it.
    record_timing : bool
        Wall-clock timings are inherently run-dependent; pass ``False`` to
        record zeros and obtain byte-identical outputs.
    """
    w = config.weights()
    psi = contrast_matrix(config.D)

    def one(rep):
        return _replicate(config, w, psi, rep, record_timing)

    reps = range(config.replications)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            records = list(pool.map(one, reps))
    else:
        records = [one(r) for r in reps]
    return ScenarioResult(config, records, _aggregate(config, records))


def run_case1(config, **kwargs):
    """Identical compositions: the statistic must saturate its bound."""
    if config.case != "identical":
        raise InputError("run_case1 needs case='identical'")
    result = run_scenario(config, **kwargs)
    bad = [r["replication"] for r in result.records if abs(r["I_a"] - r["upper_bound"]) > 1e-10]
    if bad:
        raise AssertionError(f"bound not attained in replications {bad[:10]}")
    return result


def run_case2(config, **kwargs):
    """Independent compositions: empirical type-I error at ``alpha``."""
    if config.case != "independent":
        raise InputError("run_case2 needs case='independent'")
    return run_scenario(config, **kwargs)


def run_case3(config, **kwargs):
    """SAR-correlated compositions: empirical power at ``alpha``."""
    if config.case != "sar":
        raise InputError("run_case3 needs case='sar'")
    return run_scenario(config, **kwargs)


def sar_rho_sweep(config, rhos=(0.5, 0.7, 0.9), **kwargs):
    """Mean Reyes's I per ``rho`` and whether it is nondecreasing, allowing
    a drop of one standard error of the mean."""
    rows = []
    for rho in rhos:
        res = run_case3(replace(config, rho_sar=float(rho)), **kwargs)
        mean, sd = res.aggregates["mean_I_a"], res.aggregates["sd_I_a"]
        rows.append({"rho": float(rho), "mean_I_a": mean, "se_I_a": sd / math.sqrt(len(res.records)),
                     "rejection_rate_a": res.aggregates["rejection_rate_a"]})
    monotone = all(b["mean_I_a"] >= a["mean_I_a"] - max(a["se_I_a"], b["se_I_a"]) for a, b in zip(rows, rows[1:]))
    return {"rows": rows, "monotone": monotone}
