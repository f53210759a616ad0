"""Scalable safety classifiers with order-statistic risk certificates.

The package trains classifiers whose predicted-safe region shrinks
monotonically with a scalar level, then calibrates that level on held-out
data so the probability of an unsafe point landing inside the region is
bounded by a chosen risk, with an explicit binomial confidence certificate.
"""

from .classifiers import (
    Hyperparameters,
    TrainSettings,
    boundary_radius,
    decision_value,
    load_model,
    model_from_record,
    model_to_record,
    predict,
    save_model,
)
from .config import (
    ClassifierConfig,
    DataConfig,
    ExperimentConfig,
    GridConfig,
    RiskConfig,
    load_config,
)
from .datagen import (
    Dataset,
    GaussianSpec,
    Standardizer,
    fit_standardizer,
    sample_gaussian,
    split_dataset,
    standardize,
)
from .errors import (
    InvalidArgument,
    SafeRegionsError,
    SimulationError,
    TrainingError,
    UncertifiedPlanError,
)
from .families import (
    PERFORMANCE_INDICES,
    TRAINERS,
    FamilyMember,
    FamilyResult,
    calibrate_family,
    calibrate_trained_family,
    false_safe_penalty,
    family_csv_rows,
    region_accuracy,
    safe_coverage,
    select_best,
    train_family,
)
from .kernels import KernelSpec, default_gamma, gram, kernel_eval, kernel_matrix
from .logistic import ScLrModel, train_sc_lr
from .pipeline import (
    EVALUATION_COLUMNS,
    REPORT_COLUMNS,
    ExperimentResult,
    boundary_grid_rows,
    build_plans,
    derive_seed,
    evaluate_saved,
    run_experiment,
)
from .platoon import (
    FEATURE_DIM,
    PlatoonRanges,
    PlatoonSpec,
    generate_platoon_dataset,
    platoon_features,
    simulate_platoon,
)
from .scaling import (
    WHOLE_SPACE,
    CalibrationCertificate,
    PlanCheck,
    ScalingPlan,
    binomial_cdf,
    calibrate,
    check_plan,
    discarding_parameter,
    generalized_max,
    kappa,
    min_calibration_size,
)
from .svdd import ScSvddModel, train_sc_svdd
from .svm import ScSvmModel, train_sc_svm

__version__ = "0.1.0"
