"""Joint calibration of finite hyperparameter families.

All members share one calibration set and one plan, so a union bound gives
the whole family confidence ``1 - m * B(r-1; n_c, eps)`` where ``m`` is the
family size.  Per-member scaling levels are exactly what standalone
calibration produces; only the reported confidence changes.  The selection
rule picks the member whose calibrated region performs best on calibration
data, by default the one covering the most safe calibration points, with ties
going to the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifiers import Hyperparameters, TrainSettings
from .errors import InvalidArgument, TrainingError
from .kernels import gram
from .logistic import train_sc_lr
from .scaling import CalibrationCertificate, ScalingPlan, binomial_cdf, calibrate
from .svdd import train_sc_svdd
from .svm import train_sc_svm

__all__ = [
    "TRAINERS",
    "PERFORMANCE_INDICES",
    "FamilyMember",
    "FamilyResult",
    "train_family",
    "calibrate_trained_family",
    "calibrate_family",
    "select_best",
    "safe_coverage",
    "region_accuracy",
    "false_safe_penalty",
    "family_csv_rows",
]

TRAINERS = {"svm": train_sc_svm, "svdd": train_sc_svdd, "lr": train_sc_lr}


def safe_coverage(model, certificate, calib) -> float:
    """Number of safe calibration points inside the calibrated region."""
    safe_x = calib.x[calib.y == 1]
    if safe_x.shape[0] == 0:
        return 0.0
    inside = model.decision_value(safe_x, certificate.rho_eps) < 0.0
    return float(inside.sum())


def region_accuracy(model, certificate, calib) -> float:
    """Fraction of calibration points whose label matches region membership."""
    pred = model.predict(calib.x, certificate.rho_eps)
    return float(np.mean(pred == calib.y))


def false_safe_penalty(model, certificate, calib) -> float:
    """Negated count of unsafe calibration points inside the region, so that
    maximizing it minimizes unsafe inclusions."""
    unsafe_x = calib.x[calib.y == -1]
    if unsafe_x.shape[0] == 0:
        return 0.0
    inside = model.decision_value(unsafe_x, certificate.rho_eps) < 0.0
    return -float(inside.sum())


PERFORMANCE_INDICES = {
    "safe_coverage": safe_coverage,
    "accuracy": region_accuracy,
    "min_false_safe": false_safe_penalty,
}


@dataclass
class FamilyMember:
    index: int
    hyperparameters: Hyperparameters
    model: object | None = None
    certificate: CalibrationCertificate | None = None
    score: float | None = None
    failed: bool = False
    error: str | None = None


@dataclass
class FamilyResult:
    variant: str
    plan: ScalingPlan
    members: list[FamilyMember] = field(default_factory=list)
    family_confidence: float = 0.0
    selected_index: int = -1

    @property
    def selected(self) -> FamilyMember:
        return self.members[self.selected_index]


def train_family(train, family: list[Hyperparameters], variant: str,
                 settings: TrainSettings | None = None) -> list[FamilyMember]:
    """Train every member, sharing Gram matrices between members with the
    same resolved kernel.  A member whose training fails is marked failed and
    carries the error message; it stays eligible for reporting but not for
    selection."""
    if variant not in TRAINERS:
        raise InvalidArgument(f"unknown variant {variant!r}, expected one of {sorted(TRAINERS)}")
    if len(family) == 0:
        raise InvalidArgument("family must contain at least one member")
    trainer = TRAINERS[variant]
    grams: dict = {}
    members = []
    for index, hp in enumerate(family):
        resolved = hp.kernel.resolved(np.asarray(train.x, dtype=float))
        if resolved not in grams:
            grams[resolved] = gram(resolved, np.asarray(train.x, dtype=float))
        member = FamilyMember(index=index, hyperparameters=hp)
        try:
            member.model = trainer(train, hp, settings=settings, gram_matrix=grams[resolved])
        except TrainingError as exc:
            member.failed = True
            member.error = str(exc)
        members.append(member)
    return members


def calibrate_trained_family(members: list[FamilyMember], calib, plan: ScalingPlan,
                             variant: str, *, force_uncertified: bool = False,
                             performance=safe_coverage) -> FamilyResult:
    """Calibrate trained members against one shared plan and select the best.

    Each member certificate equals its standalone calibration except that the
    confidence is replaced by the union-bound family value
    ``max(0, 1 - m * B(r-1; n_c, eps))``.
    """
    m = len(members)
    if m == 0:
        raise InvalidArgument("family must contain at least one member")
    tail = binomial_cdf(plan.r - 1, plan.n_c, plan.eps)
    family_confidence = min(1.0, max(0.0, 1.0 - m * tail))
    result = FamilyResult(variant=variant, plan=plan, family_confidence=family_confidence)
    for member in members:
        if member.failed or member.model is None:
            result.members.append(member)
            continue
        certificate = calibrate(member.model, calib, plan,
                                force_uncertified=force_uncertified)
        member.certificate = certificate.with_confidence(family_confidence)
        member.score = float(performance(member.model, member.certificate, calib))
        result.members.append(member)
    result.selected_index = select_best(result)
    return result


def calibrate_family(train, calib, family: list[Hyperparameters], variant: str,
                     plan: ScalingPlan, *, settings: TrainSettings | None = None,
                     force_uncertified: bool = False,
                     performance=safe_coverage) -> FamilyResult:
    """Train and calibrate a family in one call; see the two-stage functions
    for pipelines that reuse trained members across several plans."""
    members = train_family(train, family, variant, settings=settings)
    return calibrate_trained_family(members, calib, plan, variant,
                                    force_uncertified=force_uncertified,
                                    performance=performance)


def select_best(result: FamilyResult) -> int:
    """Index of the highest-scoring non-failed member, lowest index winning
    ties.  Raises ``TrainingError`` when every member failed."""
    best_index = -1
    best_score = -np.inf
    for member in result.members:
        if member.failed or member.score is None:
            continue
        if member.score > best_score:
            best_score = member.score
            best_index = member.index
    if best_index < 0:
        raise TrainingError("every family member failed to train")
    return best_index


def family_csv_rows(result: FamilyResult) -> list[dict]:
    """Rows for the family report table, one per member, fixed column set."""
    rows = []
    for member in result.members:
        hp = member.hyperparameters
        cert = member.certificate
        rows.append({
            "variant": result.variant,
            "eta": hp.eta,
            "tau": hp.tau,
            "kernel": hp.kernel.label(),
            "rho_eps": "" if cert is None else (
                "whole_space" if cert.kind == "whole_space" else cert.rho_eps),
            "region_kind": "" if cert is None else cert.kind,
            "J": "" if member.score is None else member.score,
            "confidence": "" if cert is None else cert.confidence,
            "selected": int(member.index == result.selected_index),
        })
    return rows
