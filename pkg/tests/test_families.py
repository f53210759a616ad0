"""Joint calibration of hyperparameter families: union-bound confidence,
shared-Gram training, selection and reporting."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from saferegions import (
    CalibrationCertificate,
    FamilyMember,
    FamilyResult,
    GaussianSpec,
    Hyperparameters,
    KernelSpec,
    ScalingPlan,
    TrainingError,
    UncertifiedPlanError,
    calibrate,
    calibrate_family,
    calibrate_trained_family,
    false_safe_penalty,
    family_csv_rows,
    region_accuracy,
    safe_coverage,
    sample_gaussian,
    select_best,
    train_family,
)

_SPEC = GaussianSpec(mu_safe=(-1.5, 0.0), mu_unsafe=(1.5, 0.0),
                     cov_safe=((1.0, 0.0), (0.0, 1.0)),
                     cov_unsafe=((1.0, 0.0), (0.0, 1.0)))

# eps = delta = 0.5 keeps the required calibration size at 11 with r = 3.
_PLAN = ScalingPlan.from_risk(0.5, 0.5)


def _splits(seed=11):
    train = sample_gaussian(_SPEC, 80, seed=seed)
    calib = sample_gaussian(_SPEC, _PLAN.n_c, seed=seed + 1)
    return train, calib


class _HalfPlane:
    """Stub model: margin is the first coordinate, so the region at level
    rho is {x : x1 < -rho}."""

    def decision_value(self, x, rho):
        return np.atleast_2d(x)[:, 0] + rho

    def predict(self, x, rho):
        return np.where(self.decision_value(x, rho) < 0.0, 1, -1)

    def boundary_radius(self, x):
        return -np.atleast_2d(x)[:, 0]


class _Calib:
    def __init__(self, x, y):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=int)

    @property
    def n_samples(self):
        return self.x.shape[0]


def _cert(rho):
    return CalibrationCertificate(rho_eps=rho, plan=_PLAN, n_U=3,
                                  confidence=0.9, certified=True)


def test_performance_indices_hand_computed():
    model = _HalfPlane()
    x = np.array([[-2.0, 0.0], [-0.5, 0.0], [0.5, 0.0], [2.0, 0.0]])
    y = np.array([1, 1, -1, -1])
    calib = _Calib(x, y)
    # Region at rho = 0 is x1 < 0: both safe points inside, both unsafe out.
    assert safe_coverage(model, _cert(0.0), calib) == 2.0
    assert region_accuracy(model, _cert(0.0), calib) == 1.0
    assert false_safe_penalty(model, _cert(0.0), calib) == 0.0
    # Region at rho = -1 is x1 < 1: one unsafe point slips inside.
    assert safe_coverage(model, _cert(-1.0), calib) == 2.0
    assert region_accuracy(model, _cert(-1.0), calib) == 0.75
    assert false_safe_penalty(model, _cert(-1.0), calib) == -1.0


def test_indices_on_single_class_calibration():
    model = _HalfPlane()
    all_safe = _Calib([[-1.0, 0.0]], [1])
    all_unsafe = _Calib([[1.0, 0.0]], [-1])
    assert false_safe_penalty(model, _cert(0.0), all_safe) == 0.0
    assert safe_coverage(model, _cert(0.0), all_unsafe) == 0.0


def _family(etas=(0.5, 1.0), kernel=None):
    kernel = kernel or KernelSpec(kind="gaussian")
    return [Hyperparameters(eta=eta, tau=0.5, kernel=kernel) for eta in etas]


def test_single_member_family_matches_standalone():
    train, calib = _splits()
    family = _family(etas=(1.0,))
    result = calibrate_family(train, calib, family, "svm", _PLAN)
    member = result.selected
    standalone = calibrate(member.model, calib, _PLAN)
    # m = 1 turns the union bound back into the standalone confidence.
    assert member.certificate.rho_eps == standalone.rho_eps
    assert member.certificate.confidence == standalone.confidence
    assert result.family_confidence == standalone.confidence
    assert result.selected_index == 0


def test_union_bound_confidence_exact():
    train, calib = _splits(seed=13)
    family = _family(etas=(0.25, 0.5, 1.0))
    result = calibrate_family(train, calib, family, "svm", _PLAN)
    # tail = B(2; 11, 1/2) = (1 + 11 + 55) / 2048, exactly representable here
    tail = Fraction(67, 2048)
    expected = float(1 - 3 * tail)
    assert result.family_confidence == pytest.approx(expected, rel=1e-12)
    for member in result.members:
        assert member.certificate.confidence == result.family_confidence
    standalone = calibrate(result.selected.model, calib, _PLAN)
    assert result.family_confidence < standalone.confidence


def test_member_levels_equal_standalone_levels():
    train, calib = _splits(seed=17)
    family = _family(etas=(0.25, 1.0, 4.0))
    result = calibrate_family(train, calib, family, "svdd", _PLAN)
    for member in result.members:
        standalone = calibrate(member.model, calib, _PLAN)
        assert member.certificate.rho_eps == standalone.rho_eps


def test_selection_is_exhaustive_argmax():
    train, calib = _splits(seed=19)
    family = _family(etas=(0.05, 0.2, 1.0, 5.0))
    result = calibrate_family(train, calib, family, "svm", _PLAN)
    scores = [m.score for m in result.members]
    assert result.selected_index == int(np.argmax(scores))
    assert result.selected.score == max(scores)


def test_selection_tie_goes_to_lowest_index():
    hp = Hyperparameters()
    members = [FamilyMember(index=i, hyperparameters=hp, score=s)
               for i, s in enumerate([1.0, 3.0, 3.0, 2.0])]
    result = FamilyResult(variant="svm", plan=_PLAN, members=members)
    assert select_best(result) == 1


def test_select_best_skips_failed_and_raises_when_all_fail():
    hp = Hyperparameters()
    members = [
        FamilyMember(index=0, hyperparameters=hp, score=9.0, failed=True),
        FamilyMember(index=1, hyperparameters=hp, score=1.0),
    ]
    result = FamilyResult(variant="svm", plan=_PLAN, members=members)
    assert select_best(result) == 1
    for member in members:
        member.failed = True
    with pytest.raises(TrainingError):
        select_best(result)


def test_failed_member_is_reported_not_selected():
    train, calib = _splits(seed=23)
    # eta = 1e-4 cannot reach the unit mass the one-class dual needs.
    family = _family(etas=(1e-4, 1.0))
    result = calibrate_family(train, calib, family, "svdd", _PLAN)
    failed, good = result.members
    assert failed.failed and failed.error
    assert failed.certificate is None and failed.score is None
    assert not good.failed
    assert result.selected_index == 1
    rows = family_csv_rows(result)
    assert rows[0]["rho_eps"] == "" and rows[0]["J"] == ""
    assert rows[0]["selected"] == 0 and rows[1]["selected"] == 1


def test_gram_shared_per_resolved_kernel(monkeypatch):
    import saferegions.families as families_module
    train, _ = _splits(seed=27)
    calls = []
    real_gram = families_module.gram

    def counting_gram(kernel, x):
        calls.append(kernel)
        return real_gram(kernel, x)

    monkeypatch.setattr(families_module, "gram", counting_gram)
    shared = KernelSpec(kind="gaussian", gamma=0.3)
    other = KernelSpec(kind="linear")
    family = [Hyperparameters(eta=e, tau=0.5, kernel=shared) for e in (0.5, 1.0, 2.0)]
    family.append(Hyperparameters(eta=1.0, tau=0.5, kernel=other))
    train_family(train, family, "svm")
    # three members share one Gram; the linear member adds a second
    assert len(calls) == 2


def test_family_requires_known_variant_and_members():
    train, calib = _splits(seed=31)
    from saferegions import InvalidArgument
    with pytest.raises(InvalidArgument):
        train_family(train, [], "svm")
    with pytest.raises(InvalidArgument):
        train_family(train, _family(), "forest")


def test_uncertifiable_plan_propagates_and_can_be_forced():
    train, calib_small = _splits(seed=37)
    bad_plan = ScalingPlan(eps=0.5, delta=1e-9, r=3, n_c=11)
    members = train_family(train, _family(etas=(1.0,)), "svm")
    with pytest.raises(UncertifiedPlanError):
        calibrate_trained_family(members, calib_small, bad_plan, "svm")
    result = calibrate_trained_family(members, calib_small, bad_plan, "svm",
                                      force_uncertified=True)
    assert not result.selected.certificate.certified


def test_csv_rows_fixed_columns():
    train, calib = _splits(seed=41)
    result = calibrate_family(train, calib, _family(), "lr", _PLAN)
    rows = family_csv_rows(result)
    expected = ["variant", "eta", "tau", "kernel", "rho_eps", "region_kind",
                "J", "confidence", "selected"]
    assert all(list(row) == expected for row in rows)
    assert sum(row["selected"] for row in rows) == 1
    assert all(row["variant"] == "lr" for row in rows)
    assert all(row["region_kind"] in ("scaled", "whole_space") for row in rows)


def test_alternative_performance_index_changes_selection_input():
    train, calib = _splits(seed=43)
    family = _family(etas=(0.1, 1.0))
    by_accuracy = calibrate_family(train, calib, family, "svm", _PLAN,
                                   performance=region_accuracy)
    for member in by_accuracy.members:
        standalone_acc = region_accuracy(member.model, member.certificate, calib)
        assert member.score == standalone_acc
        assert 0.0 <= member.score <= 1.0
