"""Regenerate the bundled data files in ``src/reyesi/data``.

Run from the repository root::

    python3 scripts/make_fixtures.py

Every file is a deterministic function of the seeds below, so rerunning
reproduces the committed bytes.
"""

import json
import os

import numpy as np
from scipy.spatial import Delaunay

from reyesi import io
from reyesi.geometry import CompositionSample, contrast_matrix, ilr_inverse
from reyesi.inference import monte_carlo_distribution, p_values
from reyesi.simulation import logistic_normal_sample, sar_sample
from reyesi.weights import from_edge_list, lattice_weights, row_standardize

OUT = os.path.join(os.path.dirname(__file__), os.pardir, "src", "reyesi", "data")


def departments(seed=20210106):
    """33 synthetic areal units shaped like the Colombian daily files.

    Adjacency comes from a Delaunay triangulation of random centroids;
    counts of patients at home, in hospital and in ICU follow a spatially
    smoothed logistic-normal field, with small units producing zero ICU
    counts the way sparsely populated departments do.
    """
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 1, size=(33, 2))
    tri = Delaunay(pts)
    edges = set()
    for simplex in tri.simplices:
        for a in range(3):
            for b in range(a + 1, 3):
                i, j = sorted((int(simplex[a]), int(simplex[b])))
                edges.add((i, j))
    ids = [f"D{k + 1:02d}" for k in range(33)]
    edge_rows = [(ids[i], ids[j]) for i, j in sorted(edges)]
    w = row_standardize(from_edge_list(edge_rows, ids))

    psi = contrast_matrix(3)
    coords = sar_sample(w, 0.5, np.array([[0.3, 0.05], [0.05, 0.2]]), psi,
                        int(rng.integers(2**32)), return_coords=True)[1]
    # shift the mean so most patients are at home and few are in ICU
    coords = coords + np.array([1.8, 1.9])
    props = ilr_inverse(coords, psi)
    totals = np.round(np.exp(rng.normal(5.5, 1.6, size=33))).astype(int) + 4
    counts = np.round(props * totals[:, None]).astype(int)
    sample = CompositionSample(counts.astype(float), ids, part_names=["home", "hospital", "icu"])
    return sample, edge_rows


def main():
    os.makedirs(OUT, exist_ok=True)
    manifest = {}

    sample, edges = departments()
    io.write_compositions(sample, os.path.join(OUT, "departments.csv"))
    io.write_edge_list(edges, os.path.join(OUT, "departments_edges.csv"))
    manifest["departments"] = {
        "units": sample.n, "parts": sample.part_names, "edges": len(edges),
        "zeros": int((sample.raw == 0).sum()), "seed": 20210106,
    }

    psi = contrast_matrix(3)
    ind = logistic_normal_sample(9, 3, np.eye(2), psi, seed=99)
    ind = CompositionSample(ind.parts, [f"u{k}" for k in range(9)], part_names=["a", "b", "c"])
    io.write_compositions(ind, os.path.join(OUT, "independent_3x3.csv"))
    manifest["independent_3x3"] = {"rows": 3, "cols": 3, "D": 3, "seed": 99}

    w = row_standardize(lattice_weights(7, 7, "queen"))
    sar = sar_sample(w, 0.9, np.eye(2), psi, seed=7)
    sar = CompositionSample(sar.parts, [f"c{k:02d}" for k in range(49)], part_names=["a", "b", "c"])
    io.write_compositions(sar, os.path.join(OUT, "sar_7x7_rho09.csv"))
    dist = monte_carlo_distribution(sar, w, 100_000, 0)
    manifest["sar_7x7_rho09"] = {
        "rows": 7, "cols": 7, "contiguity": "queen", "rho": 0.9, "D": 3, "seed": 7,
        "p_pos_B100000_seed0": p_values(dist).p_pos, "observed": dist.observed,
    }

    # five units where E has no neighbor: exercises the island policy
    isl = logistic_normal_sample(5, 3, np.eye(2), psi, seed=5)
    isl = CompositionSample(isl.parts, list("ABCDE"), part_names=["a", "b", "c"])
    io.write_compositions(isl, os.path.join(OUT, "island.csv"))
    io.write_edge_list([("A", "B"), ("B", "C"), ("C", "D"), ("A", "D")], os.path.join(OUT, "island_edges.csv"))
    manifest["island"] = {"island": "E"}

    with open(os.path.join(OUT, "fixtures.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    main()
