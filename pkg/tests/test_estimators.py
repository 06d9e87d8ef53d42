import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from conftest import random_compositions, record_bound
from reyesi import CLRTransformer, ILRTransformer, MoranMean, MultiplicativeReplacement, ReyesI
from reyesi.exceptions import DimensionMismatch, NonPositivePart
from reyesi.geometry import clr, ilr
from reyesi.inference import exact_distribution, monte_carlo_distribution
from reyesi.geometry import CompositionSample
from reyesi.weights import lattice_weights, row_standardize


@pytest.fixture
def w33():
    return row_standardize(lattice_weights(3, 3))


def test_clr_transformer(rng):
    X = random_compositions(rng, 10, 4)
    t = CLRTransformer().fit(X)
    np.testing.assert_allclose(t.transform(X), clr(X))
    np.testing.assert_allclose(t.inverse_transform(t.transform(X)), X / X.sum(axis=1, keepdims=True), rtol=1e-12)
    assert list(t.get_feature_names_out()) == ["x0", "x1", "x2", "x3"]


def test_ilr_transformer(rng):
    X = random_compositions(rng, 10, 4)
    t = ILRTransformer("pivot").fit(X)
    np.testing.assert_allclose(t.transform(X), ilr(X, "pivot"))
    assert t.get_feature_names_out().tolist() == ["ilr1", "ilr2", "ilr3"]
    with pytest.raises(ValueError):
        t.transform(X[:, :3])


def test_transformer_rejects_zeros():
    with pytest.raises(NonPositivePart):
        CLRTransformer().fit([[1, 0, 2]])


def test_replacement_then_ilr_pipeline():
    X = np.array([[4.0, 0.0, 6.0], [2.0, 8.0, 0.0], [0.0, 2.0, 3.0]])
    pipe = make_pipeline(MultiplicativeReplacement(), ILRTransformer())
    out = pipe.fit_transform(X)
    assert out.shape == (3, 2) and np.isfinite(out).all()
    np.testing.assert_allclose(pipe[0].deltas_, [1.0, 1.0, 1.5])


def test_estimator_params_and_clone(w33):
    est = ReyesI(w33, permutations=99, seed=3, contrast="pivot")
    params = est.get_params()
    assert params["permutations"] == 99 and params["contrast"] == "pivot"
    twin = clone(est)
    assert twin.get_params()["seed"] == 3
    assert not hasattr(twin, "I_")
    est.set_params(permutations=50)
    assert est.permutations == 50


def test_reyes_estimator_matches_functions(rng, w33):
    X = random_compositions(rng, 9, 3)
    est = ReyesI(w33, permutations=999, seed=4).fit(X)
    record_bound(est.I_, est.upper_bound_)
    dist = monte_carlo_distribution(CompositionSample(X), w33, 999, 4)
    np.testing.assert_array_equal(est.distribution_.values, dist.values)
    assert est.EI_ == -1 / 8
    assert est.p_sim_ == est.p_values_.p_pos
    cv = est.critical_values(0.05)
    assert cv["lower"] <= cv["upper"]


def test_reyes_estimator_dense_weights_are_standardized(rng):
    X = random_compositions(rng, 4, 3)
    W = lattice_weights(2, 2).to_dense()
    est = ReyesI(W, method="exact").fit(X)
    assert est.distribution_.values.size == 24
    assert est.weights_.standardized


def test_reyes_estimator_checks_shape(rng, w33):
    with pytest.raises(DimensionMismatch):
        ReyesI(w33).fit(random_compositions(rng, 8, 3))
    with pytest.raises(ValueError):
        ReyesI(w33, method="asymptotic").fit(random_compositions(rng, 9, 3))


def test_moran_mean_estimator(rng, w33):
    X = random_compositions(rng, 9, 3)
    est = MoranMean(w33, method="monte_carlo", permutations=200).fit(X)
    assert est.I_ == pytest.approx(est.component_I_.mean())
    s = CompositionSample(X[:6])
    w = row_standardize(lattice_weights(2, 3))
    ex = MoranMean(w, method="exact").fit(X[:6])
    np.testing.assert_array_equal(ex.distribution_.values, exact_distribution(s, w, statistic="moran_mean").values)


def test_moran_mean_accepts_zeros(w33, rng):
    X = random_compositions(rng, 9, 3)
    X[0, 1] = 0.0
    est = MoranMean(w33, permutations=10).fit(X)
    assert np.isfinite(est.I_)
