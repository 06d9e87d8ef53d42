"""File formats and the end-to-end analysis pipeline."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import __version__
from .exceptions import DimensionMismatch, DuplicateId, InputError, RaggedRow
from .geometry import CompositionSample, replace_zeros
from .inference import critical_values, exact_distribution, monte_carlo_distribution, p_values
from .statistic import moran_mean, reyes_statistic
from .weights import SpatialWeights, from_edge_list, lattice_weights, row_standardize

log = logging.getLogger(__name__)

__all__ = [
    "AnalysisRequest",
    "read_compositions",
    "write_compositions",
    "read_edge_list",
    "write_edge_list",
    "build_weights",
    "analyze",
    "dumps_report",
    "daily_series",
    "scenario_series",
    "rejection_series",
    "write_series",
    "fixture_path",
]


def fixture_path(name):
    """Path of a bundled data file."""
    return str(resources.files("reyesi") / "data" / name)


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def read_compositions(path):
    """Read a CSV with header ``id,part_1,...,part_D``.

    Values must be nonnegative decimals; zeros pass through (see
    :func:`reyesi.geometry.replace_zeros`). Row order is preserved.
    """
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if len(header) < 3:
            raise DimensionMismatch(f"{path}: need an id column and at least 2 parts")
        ids, rows = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            uid = rec[0].strip()
            if len(rec) != len(header):
                raise RaggedRow(f"{path}:{lineno}: unit {uid!r} has {len(rec) - 1} parts, expected {len(header) - 1}")
            try:
                values = [float(c) for c in rec[1:]]
            except ValueError:
                raise InputError(f"{path}:{lineno}: unit {uid!r} has a non-numeric value") from None
            if uid in ids:
                raise DuplicateId(f"{path}:{lineno}: duplicate unit id {uid!r}")
            ids.append(uid)
            rows.append(values)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return CompositionSample(np.array(rows), ids, part_names=[h.strip() for h in header[1:]])


def write_compositions(sample, path):
    """Write ``sample.raw`` with round-trip float formatting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", *sample.part_names])
        for uid, row in zip(sample.ids, sample.raw):
            writer.writerow([uid, *(repr(float(v)) for v in row)])


def read_edge_list(path):
    """Undirected edges from a CSV with header ``src,dst``."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:2]] != ["src", "dst"]:
            raise InputError(f"{path}: header must be 'src,dst'")
        return [(r["src"].strip(), r["dst"].strip()) for r in reader if r["src"] and r["src"].strip()]


def write_edge_list(edges, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src", "dst"])
        writer.writerows(edges)


@dataclass
class AnalysisRequest:
    """Inputs of :func:`analyze`.

    Exactly one weights source is required: ``edges_path`` or a lattice
    given by ``rows`` and ``cols`` (units in row-major order).
    """

    compositions_path: str
    edges_path: str | None = None
    rows: int | None = None
    cols: int | None = None
    contiguity: str = "queen"
    B: int = 10_000
    seed: int = 0
    alpha: float = 0.05
    zero_replace: bool = False
    delta_policy: str = "fraction_of_min"
    delta: float = 0.5
    island_policy: str = "error"
    mode: str = "monte_carlo"
    exact_cap: int = 9
    workers: int = 1
    correction: str = "raw"

    def __post_init__(self):
        has_edges = self.edges_path is not None
        has_lattice = self.rows is not None or self.cols is not None
        if has_edges == has_lattice:
            raise InputError("give exactly one weights source: an edge list or --rows/--cols")
        if has_lattice and (self.rows is None or self.cols is None):
            raise InputError("a lattice needs both rows and cols")
        if self.B < 1:
            raise InputError("B must be >= 1")


def build_weights(ids, edges_path=None, rows=None, cols=None, contiguity="queen", island_policy="error"):
    """Binary contiguity aligned to ``ids``, row-standardized."""
    if edges_path is not None:
        w = from_edge_list(read_edge_list(edges_path), ids)
    else:
        w = lattice_weights(rows, cols, contiguity)
        if w.n != len(ids):
            raise DimensionMismatch(f"lattice {rows}x{cols} has {w.n} cells but the data has {len(ids)} units")
        w = SpatialWeights(w.sparse, ids, meta=w.meta)
    policy = "drop_unit" if island_policy in ("drop", "drop_unit") else island_policy
    return row_standardize(w, policy)


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def dumps_report(report):
    """Deterministic JSON text (sorted keys, non-finite floats as null)."""
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def analyze(request):
    """Run the full pipeline and return the report as a dict.

    read -> optional zero replacement -> weights -> statistic and analytic
    moments -> randomization distribution -> p-values.
    """
    return run_analysis(request)[0]


def run_analysis(request):
    """Like :func:`analyze` but also returns the permutation distribution."""
    sample = read_compositions(request.compositions_path)
    provenance = {
        "seed": request.seed if request.mode == "monte_carlo" else None,
        "B": request.B if request.mode == "monte_carlo" else None,
        "mode": request.mode,
        "alpha": request.alpha,
        "correction": request.correction,
        "island_policy": request.island_policy,
        "version": __version__,
        "inputs": {
            "compositions": {
                "file": os.path.basename(request.compositions_path),
                "sha256": file_digest(request.compositions_path),
            }
        },
    }
    if request.zero_replace:
        n_zero = int((sample.raw == 0).sum())
        sample = CompositionSample(
            replace_zeros(sample.raw, request.delta_policy, request.delta), sample.ids, part_names=sample.part_names
        )
        provenance["zero_replacement"] = {
            "method": "multiplicative", "delta_policy": request.delta_policy,
            "delta": request.delta, "zeros_replaced": n_zero,
        }
    if request.edges_path is not None:
        provenance["inputs"]["edges"] = {
            "file": os.path.basename(request.edges_path), "sha256": file_digest(request.edges_path),
        }
    else:
        provenance["inputs"]["lattice"] = {
            "rows": request.rows, "cols": request.cols, "contiguity": request.contiguity,
        }
    w = build_weights(sample.ids, request.edges_path, request.rows, request.cols,
                      request.contiguity, request.island_policy)
    dropped = w.meta.get("dropped_units", [])
    if dropped:
        index = {uid: k for k, uid in enumerate(sample.ids)}
        sample = sample.take([index[uid] for uid in w.ids])
        provenance["dropped_units"] = list(dropped)

    stat = reyes_statistic(sample, w)
    if request.mode == "exact":
        dist = exact_distribution(sample, w, cap=request.exact_cap, workers=request.workers)
    else:
        dist = monte_carlo_distribution(sample, w, request.B, request.seed, workers=request.workers)
    pv = p_values(dist, request.correction)
    summary = dist.summary()
    summary["critical_values"] = critical_values(dist, request.alpha)
    summary["count"] = int(dist.values.size)

    band = 4 * summary["sd"] / math.sqrt(dist.values.size) if dist.values.size > 1 else 0.0
    within = abs(summary["mean"] - stat.e_r) <= band or request.mode == "exact"
    if not within:
        log.warning("permutation mean %.6g is outside 4 sd/sqrt(B) of %.6g", summary["mean"], stat.e_r)

    try:
        mm = moran_mean(sample, w)
        baseline = {"value": mm.value, "component_values": list(mm.component_values)}
    except ArithmeticError:
        baseline = None

    report = {
        "n": sample.n,
        "D": sample.D,
        "part_names": sample.part_names,
        "statistic": stat.to_dict(),
        "p_values": pv.to_dict(),
        "distribution_summary": summary,
        "moran_mean": baseline,
        "sanity": {"mean_within_4se": bool(within), "band": band},
        "reject_positive": pv.p_pos < request.alpha,
        "provenance": provenance,
    }
    return report, dist


DAILY_COLUMNS = ("day", "i_a", "p_hat")
REJECTION_COLUMNS = ("case", "grid_size", "D", "contiguity", "covariance", "rho_sar",
                     "rejection_rate_a", "rejection_rate_m")

SCHEMAS = {
    "daily": {
        "day": "label of the report (file stem unless given)",
        "i_a": "observed Reyes's I",
        "p_hat": "one-sided randomization p-value for positive autocorrelation",
    },
    "scenario": {
        "replication": "replication index",
        "I_a": "Reyes's I",
        "I_m": "average of componentwise Moran's I",
        "p_a": "Monte Carlo p-value of I_a",
        "p_m": "Monte Carlo p-value of I_m",
        "time_a_ns": "wall time of I_a plus its Monte Carlo distribution (ns)",
        "time_m_ns": "wall time of I_m plus its Monte Carlo distribution (ns)",
    },
    "rejection": {
        "case": "scenario case",
        "grid_size": "number of lattice cells",
        "D": "number of parts",
        "contiguity": "queen or rook",
        "covariance": "covariance structure",
        "rho_sar": "SAR dependence parameter",
        "rejection_rate_a": "share of replications with p_a < alpha",
        "rejection_rate_m": "share of replications with p_m < alpha",
    },
}


def daily_series(reports, labels):
    return [{"day": label, "i_a": r["statistic"]["value"], "p_hat": r["p_values"]["p_pos"]}
            for label, r in zip(labels, reports)]


def scenario_series(records):
    return [{k: rec[k] for k in SCHEMAS["scenario"]} for rec in records]


def rejection_series(summaries):
    out = []
    for s in summaries:
        cfg, agg = s["config"], s["aggregates"]
        out.append({
            "case": cfg["case"], "grid_size": cfg["grid"][0] * cfg["grid"][1], "D": cfg["D"],
            "contiguity": cfg["contiguity"], "covariance": cfg["covariance"]["kind"],
            "rho_sar": cfg["rho_sar"],
            "rejection_rate_a": agg.get("rejection_rate_a"), "rejection_rate_m": agg.get("rejection_rate_m"),
        })
    return out


def read_records(path):
    """Scenario records CSV back into dicts of floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        out = []
        for row in csv.DictReader(fh):
            rec = {k: float(v) for k, v in row.items()}
            rec["replication"] = int(rec["replication"])
            for k in ("time_a_ns", "time_m_ns"):
                rec[k] = int(rec[k])
            out.append(rec)
    return out


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return "" if v is None else str(v)


def write_series(rows, kind, path):
    """Tidy CSV plus a ``<path>.schema.json`` sidecar describing columns."""
    columns = list(SCHEMAS[kind])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    with open(f"{path}.schema.json", "w", encoding="utf-8") as fh:
        json.dump({"kind": kind, "columns": SCHEMAS[kind]}, fh, indent=2)
        fh.write("\n")

