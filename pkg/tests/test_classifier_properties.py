"""Shared contract of all scalable classifiers.

Every variant must be strictly increasing in the scaling level, have an
exactly computable boundary root, predict safe exactly below that root, and
produce nested regions as the level decreases.
"""

from __future__ import annotations

import numpy as np
import pytest

from saferegions import (
    GaussianSpec,
    Hyperparameters,
    KernelSpec,
    sample_gaussian,
    train_sc_lr,
    train_sc_svdd,
    train_sc_svm,
)

_SPEC = GaussianSpec(mu_safe=(-1.0, -1.0), mu_unsafe=(1.0, 1.0),
                     cov_safe=((1.0, 0.0), (0.0, 1.0)),
                     cov_unsafe=((1.0, 0.0), (0.0, 1.0)))
_TRAINERS = {"svm": train_sc_svm, "svdd": train_sc_svdd, "lr": train_sc_lr}
_KERNELS = ("linear", "gaussian", "polynomial")


@pytest.fixture(scope="module")
def models():
    data = sample_gaussian(_SPEC, 120, seed=29)
    out = {}
    for variant, trainer in _TRAINERS.items():
        for kind in _KERNELS:
            hp = Hyperparameters(eta=0.8, tau=0.35, kernel=KernelSpec(kind=kind))
            out[variant, kind] = trainer(data, hp)
    return out


def _sample_points(rng, n=60):
    return rng.normal(scale=2.0, size=(n, 2))


@pytest.mark.parametrize("variant", sorted(_TRAINERS))
@pytest.mark.parametrize("kind", _KERNELS)
def test_strictly_increasing_in_level(models, variant, kind):
    model = models[variant, kind]
    rng = np.random.default_rng(33)
    x = _sample_points(rng)
    for _ in range(10):
        r1, r2 = sorted(rng.normal(scale=2.0, size=2))
        if r1 == r2:
            continue
        v1 = model.decision_value(x, r1)
        v2 = model.decision_value(x, r2)
        assert (v2 >= v1).all()
        if variant == "lr":
            # The logistic link flattens into float plateaus near +-0.5;
            # strictness is only expressible while one side sits in the band
            # where the slope still exceeds the local float spacing.
            interior = (np.abs(v1) < 0.5 - 1e-12) | (np.abs(v2) < 0.5 - 1e-12)
        else:
            interior = np.ones(x.shape[0], dtype=bool)
        assert interior.any()
        assert (v2[interior] > v1[interior]).all()


@pytest.mark.parametrize("variant", sorted(_TRAINERS))
@pytest.mark.parametrize("kind", _KERNELS)
def test_boundary_root_and_membership_equivalence(models, variant, kind):
    model = models[variant, kind]
    rng = np.random.default_rng(35)
    x = _sample_points(rng)
    root = model.boundary_radius(x)
    at_root = model.decision_value(x, 0.0) * 0.0
    for i in range(x.shape[0]):
        at_root[i] = model.decision_value(x[i:i + 1], float(root[i]))[0]
    assert float(np.abs(at_root).max()) <= 1e-9
    # predict == -1 exactly when the level is at or above the root.
    for rho in (-2.0, -0.1, 0.0, 0.3, 1.7):
        pred = model.predict(x, rho)
        assert np.array_equal(pred == -1, rho >= root)


@pytest.mark.parametrize("variant", sorted(_TRAINERS))
@pytest.mark.parametrize("kind", _KERNELS)
def test_regions_nest(models, variant, kind):
    model = models[variant, kind]
    rng = np.random.default_rng(37)
    x = _sample_points(rng, n=200)
    levels = sorted(rng.normal(scale=1.5, size=5))
    for small, large in zip(levels, levels[1:]):
        inside_large_level = model.decision_value(x, large) < 0.0
        inside_small_level = model.decision_value(x, small) < 0.0
        # Lower level, larger region: membership at the larger level implies
        # membership at the smaller one.
        assert not (inside_large_level & ~inside_small_level).any()


@pytest.mark.parametrize("variant", sorted(_TRAINERS))
def test_whole_space_level_admits_everything(models, variant):
    model = models[variant, "gaussian"]
    rng = np.random.default_rng(39)
    x = _sample_points(rng)
    vals = model.decision_value(x, float("-inf"))
    assert (vals < 0.0).all()
    assert (model.predict(x, float("-inf")) == 1).all()


@pytest.mark.parametrize("variant", sorted(_TRAINERS))
def test_scalar_and_batch_agree(models, variant):
    model = models[variant, "linear"]
    rng = np.random.default_rng(41)
    x = _sample_points(rng, n=10)
    batch = model.margin(x)
    singles = np.array([model.margin(x[i]) for i in range(10)])
    # Single-row BLAS paths may associate differently; agreement is to float
    # precision, not bit identity.
    assert np.allclose(batch, singles, rtol=1e-10, atol=1e-12)
