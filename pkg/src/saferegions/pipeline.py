"""End-to-end experiment pipeline: data, training, calibration, selection,
test evaluation, and deterministic report files.

Every output byte is a pure function of (config, seed): float cells are
written with repr so reruns are byte-identical, rows follow a fixed order
(variant as configured, then eps as configured, then member index), and no
timestamps or environment data are recorded.

Report columns, in order:
    variant, member, eta, tau, kernel, eps, delta, beta, r, n_c, n_U,
    rho_eps, region_kind, certified, confidence, J, joint_freq,
    conditional_freq, accuracy_rho0, n_test, selected

joint_freq is the headline column: the fraction of all test points that are
unsafe AND inside the region.  conditional_freq is the unsafe fraction among
test points inside the region (empty when the region holds no test points).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .classifiers import save_model
from .config import ExperimentConfig
from .datagen import Dataset, sample_gaussian, standardize
from .errors import InvalidArgument, UncertifiedPlanError
from .families import FamilyResult, calibrate_trained_family, train_family
from .platoon import generate_platoon_dataset
from .scaling import ScalingPlan, check_plan, min_calibration_size

__all__ = [
    "REPORT_COLUMNS",
    "EVALUATION_COLUMNS",
    "ExperimentResult",
    "derive_seed",
    "build_plans",
    "build_datasets",
    "run_experiment",
    "boundary_grid_rows",
    "evaluate_saved",
]

REPORT_COLUMNS = [
    "variant", "member", "eta", "tau", "kernel", "eps", "delta", "beta", "r",
    "n_c", "n_U", "rho_eps", "region_kind", "certified", "confidence", "J",
    "joint_freq", "conditional_freq", "accuracy_rho0", "n_test", "selected",
]

EVALUATION_COLUMNS = [
    "variant", "eta", "tau", "kernel", "eps", "rho_eps", "region_kind",
    "certified", "confidence", "joint_freq", "conditional_freq",
    "accuracy_rho0", "n_test",
]

# seed-derivation tags for the independent data splits
_TAG_TRAIN = 101
_TAG_TEST = 102
_TAG_CALIB = 200
_TAG_POOL = 300


def derive_seed(base: int, *tags: int) -> int:
    """Deterministic child seed for a named substream of the run seed."""
    seq = np.random.SeedSequence([int(base), *[int(t) for t in tags]])
    return int(seq.generate_state(1, np.uint64)[0] >> 1)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    plans: dict
    family_results: dict          # (variant, eps) -> FamilyResult
    report_rows: list
    all_certified: bool
    scaler: object | None = None
    train_original: Dataset | None = None
    output_dir: Path | None = None
    files: dict = field(default_factory=dict)


def build_plans(config: ExperimentConfig, *, n_c: int | None = None) -> dict:
    """One plan per configured eps; n_c overrides the closed-form size."""
    risk = config.risk
    explicit = n_c if n_c is not None else risk.n_c
    return {eps: ScalingPlan.from_risk(eps, risk.delta, risk.beta, n_c=explicit)
            for eps in risk.eps}


def _check_all_plans(plans: dict, force_uncertified: bool) -> bool:
    failing = {eps: plan for eps, plan in plans.items()
               if not check_plan(plan).certified}
    if failing and not force_uncertified:
        parts = []
        for eps, plan in failing.items():
            minimal = min_calibration_size(eps, plan.delta, plan.beta)
            parts.append(f"eps={eps}: n_c={plan.n_c} is not certifiable at "
                         f"delta={plan.delta}, minimal n_c is {minimal}")
        raise UncertifiedPlanError(
            "; ".join(parts) + " (pass --force-uncertified to run anyway)")
    return not failing


def build_datasets(config: ExperimentConfig, plans: dict):
    """Return (train, {eps: calib}, test) according to the configured source.

    Generated calibration sets are drawn independently per eps at exactly the
    plan size; a csv calibration file must match every plan's n_c.
    """
    data = config.data
    if data.generator == "gaussian":
        spec = data.gaussian
        train = sample_gaussian(spec, data.n_train,
                                seed=derive_seed(config.seed, _TAG_TRAIN), role="train")
        test = sample_gaussian(spec, data.n_test,
                               seed=derive_seed(config.seed, _TAG_TEST), role="test")
        calibs = {eps: sample_gaussian(spec, plans[eps].n_c,
                                       seed=derive_seed(config.seed, _TAG_CALIB, i),
                                       role="calib")
                  for i, eps in enumerate(plans)}
        return train, calibs, test
    if data.generator == "platoon":
        sizes = [data.n_train] + [plans[eps].n_c for eps in plans] + [data.n_test]
        pool = generate_platoon_dataset(sum(sizes), ranges=data.platoon,
                                        seed=derive_seed(config.seed, _TAG_POOL))
        # scenarios are i.i.d. across indices, so consecutive slices are
        # themselves independent samples
        cuts = np.cumsum([0] + sizes)
        parts = [pool.subset(range(cuts[k], cuts[k + 1])) for k in range(len(sizes))]
        train, *calib_parts, test = parts
        return train, dict(zip(plans, calib_parts)), test
    paths = data.paths
    train = Dataset.from_csv(paths["train"])
    calib = Dataset.from_csv(paths["calib"])
    test = Dataset.from_csv(paths["test"])
    for eps, plan in plans.items():
        if plan.n_c != calib.n_samples:
            raise InvalidArgument(
                f"calibration file {paths['calib']} has {calib.n_samples} rows but "
                f"the eps={eps} plan requires n_c={plan.n_c}; set risk.n_c to the "
                f"file size or supply a matching file")
    return train, {eps: calib for eps in plans}, test


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list, rows: list) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def _member_rows(variant: str, eps_value: float, result: FamilyResult,
                 margins: dict, labels: np.ndarray) -> list:
    unsafe = labels == -1
    n_test = labels.size
    rows = []
    for member in result.members:
        hp = member.hyperparameters
        cert = member.certificate
        base = [variant, member.index, float(hp.eta), float(hp.tau), hp.kernel.label(),
                float(eps_value), float(result.plan.delta), float(result.plan.beta),
                result.plan.r, result.plan.n_c]
        if member.failed or cert is None:
            rows.append(base + ["", "", "", "", "", "", "", "", "", n_test, 0])
            continue
        s = margins[member.index]
        inside = (s + cert.rho_eps) < 0.0
        joint_count = int((inside & unsafe).sum())
        inside_count = int(inside.sum())
        joint = joint_count / n_test
        conditional = "" if inside_count == 0 else joint_count / inside_count
        accuracy = float(np.mean(np.where(s < 0.0, 1, -1) == labels))
        rho_cell = "whole_space" if cert.kind == "whole_space" else float(cert.rho_eps)
        rows.append(base + [cert.n_U, rho_cell, cert.kind, cert.certified,
                            float(cert.confidence), float(member.score), joint,
                            conditional, accuracy, n_test,
                            int(member.index == result.selected_index)])
    return rows


def run_experiment(config: ExperimentConfig, *, force_uncertified: bool = False,
                   write: bool = True, evaluate: bool = True) -> ExperimentResult:
    """Run the full pipeline and (optionally) write the report files.

    Families are trained once per variant and reused across the eps sweep;
    each eps calibrates fresh copies of the trained members against its own
    plan and calibration set.
    """
    plans = build_plans(config)
    all_certified = _check_all_plans(plans, force_uncertified)
    if config.data.generator == "csv" and config.risk.n_c is None:
        # size the plans from the calibration file, then re-check
        calib_rows = Dataset.from_csv(config.data.paths["calib"]).n_samples
        plans = build_plans(config, n_c=calib_rows)
        all_certified = _check_all_plans(plans, force_uncertified)

    train, calibs, test = build_datasets(config, plans)
    train_original = train
    scaler = None
    if config.data.standardize:
        (train, *rest, test), scaler = standardize(
            train, *[calibs[eps] for eps in plans], test)
        calibs = dict(zip(plans, rest))

    settings = config.classifier.train_settings()
    family = config.classifier.family()
    labels = test.y
    family_results: dict = {}
    report_rows: list = []
    for variant in config.classifier.variants:
        members = train_family(train, family, variant, settings=settings)
        margins = {}
        if evaluate:
            margins = {m.index: m.model.margin(test.x)
                       for m in members if not m.failed}
        for eps in config.risk.eps:
            fresh = [replace(m) for m in members]
            result = calibrate_trained_family(fresh, calibs[eps], plans[eps], variant,
                                              force_uncertified=force_uncertified)
            family_results[variant, eps] = result
            if evaluate:
                report_rows.extend(_member_rows(variant, eps, result, margins, labels))

    result = ExperimentResult(config=config, plans=plans, family_results=family_results,
                              report_rows=report_rows, all_certified=all_certified,
                              scaler=scaler, train_original=train_original)
    if write:
        _write_outputs(result, test if evaluate else None)
    return result


def _write_outputs(result: ExperimentResult, test: Dataset | None) -> None:
    config = result.config
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}

    config_path = out / "resolved_config.yaml"
    config_path.write_text(yaml.safe_dump(config.to_mapping(), sort_keys=True))
    files["config"] = config_path

    if test is not None:
        report_path = out / "report.csv"
        _write_csv(report_path, REPORT_COLUMNS, result.report_rows)
        files["report"] = report_path

    models_dir = out / "models"
    models_dir.mkdir(exist_ok=True)
    model_files = []
    membership_files = []
    for (variant, eps), family_result in result.family_results.items():
        selected = family_result.selected
        model_path = models_dir / f"{variant}_eps_{repr(float(eps))}.json"
        save_model(selected.model, model_path, certificate=selected.certificate)
        model_files.append(model_path)
        if test is None:
            continue
        # per-point membership table so every Pr{} cell can be recomputed
        live = [m for m in family_result.members if not m.failed]
        inside_cols = {m.index: (m.model.margin(test.x) + m.certificate.rho_eps) < 0.0
                       for m in live}
        header = ["index", "label"] + [f"member_{m.index}" for m in live]
        rows = []
        for i in range(test.n_samples):
            rows.append([i, int(test.y[i])] + [int(inside_cols[m.index][i]) for m in live])
        membership_path = out / f"membership_{variant}_eps_{repr(float(eps))}.csv"
        _write_csv(membership_path, header, rows)
        membership_files.append(membership_path)

    files["models"] = model_files
    files["membership"] = membership_files
    result.output_dir = out
    result.files = files


def boundary_grid_rows(model, certificate, bbox: tuple, resolution: int,
                       scaler=None) -> list:
    """Uniform grid rows (x1, x2, f_value, inside) for a 2-D region boundary.

    Coordinates are in the original data space; the model is evaluated on the
    standardized image when a scaler is given.
    """
    x1_min, x1_max, x2_min, x2_max = map(float, bbox)
    xs = np.linspace(x1_min, x1_max, int(resolution))
    ys = np.linspace(x2_min, x2_max, int(resolution))
    g1, g2 = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([g1.ravel(), g2.ravel()])
    mapped = scaler.apply(pts) if scaler is not None else pts
    f = model.decision_value(mapped, certificate.rho_eps)
    rows = []
    for k in range(pts.shape[0]):
        rows.append([float(pts[k, 0]), float(pts[k, 1]), float(f[k]), int(f[k] < 0.0)])
    return rows


def data_bbox(train: Dataset, margin: float) -> tuple:
    lo = train.x.min(axis=0) - margin
    hi = train.x.max(axis=0) + margin
    return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])


def evaluate_saved(run_dir, out_path=None) -> list:
    """Recompute test frequencies for the models saved by a previous run.

    Reads resolved_config.yaml and models/*.json from ``run_dir``, rebuilds
    the test split (and the training split, to refit the standardizer) from
    the stored config, and writes evaluation.csv with EVALUATION_COLUMNS.
    The frequencies must agree with the matching report.csv rows.
    """
    from .classifiers import load_model

    run_dir = Path(run_dir)
    config_path = run_dir / "resolved_config.yaml"
    if not config_path.exists():
        raise InvalidArgument(f"{run_dir} has no resolved_config.yaml; run the "
                              "pipeline first")
    config = ExperimentConfig.from_mapping(yaml.safe_load(config_path.read_text()))
    model_paths = sorted((run_dir / "models").glob("*.json"))
    if not model_paths:
        raise InvalidArgument(f"{run_dir}/models holds no saved models")

    plans = build_plans(config)
    if config.data.generator == "csv" and config.risk.n_c is None:
        calib_rows = Dataset.from_csv(config.data.paths["calib"]).n_samples
        plans = build_plans(config, n_c=calib_rows)
    train, _, test = build_datasets(config, plans)
    if config.data.standardize:
        (train, test), scaler = standardize(train, test)

    loaded = []
    for path in model_paths:
        model, certificate = load_model(path)
        if certificate is None:
            raise InvalidArgument(f"{path} carries no certificate")
        loaded.append((model, certificate))
    # fixed order: variant as configured, then eps as configured
    variant_order = {v: i for i, v in enumerate(config.classifier.variants)}
    eps_order = {float(e): i for i, e in enumerate(config.risk.eps)}
    loaded.sort(key=lambda mc: (variant_order.get(mc[0].variant, len(variant_order)),
                                eps_order.get(float(mc[1].plan.eps), len(eps_order))))

    unsafe = test.y == -1
    rows = []
    for model, cert in loaded:
        s = model.margin(test.x)
        inside = (s + cert.rho_eps) < 0.0
        joint_count = int((inside & unsafe).sum())
        inside_count = int(inside.sum())
        conditional = "" if inside_count == 0 else joint_count / inside_count
        hp = model.hyperparameters
        rows.append([model.variant, float(hp.eta), float(hp.tau), model.kernel.label(),
                     float(cert.plan.eps),
                     "whole_space" if cert.kind == "whole_space" else float(cert.rho_eps),
                     cert.kind, cert.certified, float(cert.confidence),
                     joint_count / test.n_samples, conditional,
                     float(np.mean(np.where(s < 0.0, 1, -1) == test.y)),
                     test.n_samples])
    out_path = Path(out_path) if out_path is not None else run_dir / "evaluation.csv"
    _write_csv(out_path, EVALUATION_COLUMNS, rows)
    return rows
