"""Shared contract of scalable classifiers.

A scalable classifier exposes a decision value ``f(x, rho)`` that is
continuous and strictly increasing in the scalar level ``rho``, with a sign
change somewhere in ``rho`` for every ``x``.  Points are predicted safe (+1)
exactly when ``f(x, rho) < 0``, with ties going to unsafe, so raising ``rho``
only ever shrinks the predicted-safe region and regions are nested.

All three variants in this package share an additive core: there is a
level-free margin ``s(x)`` with ``f(x, rho) = link(s(x) + rho)`` for a strictly
increasing link fixing ``link(0) = 0``.  The boundary level of a point, the
unique root of ``f(x, .)``, is therefore ``-s(x)``, and the membership test
``f(x, rho) < 0`` is identical to ``rho < boundary_radius(x)``.

Models are immutable after training; their prediction methods hold no state
and can be shared freely across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .kernels import KernelSpec

__all__ = [
    "Hyperparameters",
    "TrainSettings",
    "TrainingDiagnostics",
    "ScalableModel",
    "box_bounds",
    "predict",
    "decision_value",
    "boundary_radius",
    "save_model",
    "load_model",
    "model_to_record",
    "model_from_record",
]

# Rows per block when evaluating kernels against large point sets, sized to
# keep transient cross-kernel blocks in the low hundreds of MB.
PREDICT_CHUNK = 16384


@dataclass(frozen=True)
class Hyperparameters:
    """Regularization weight eta, class-asymmetry weight tau, kernel choice.

    tau in (0, 1) splits the misclassification budget between the classes:
    slack on safe samples is weighted (1 - tau) and on unsafe samples tau, so
    small tau protects the safe class and large tau the unsafe one.
    """

    eta: float = 1.0
    tau: float = 0.5
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidArgument(f"eta must be positive, got {self.eta!r}")
        if not 0.0 < self.tau < 1.0:
            raise InvalidArgument(f"tau must lie strictly between 0 and 1, got {self.tau!r}")


@dataclass(frozen=True)
class TrainSettings:
    """Optimizer knobs. max_iter=None keeps each trainer's own default."""

    tol: float = 1e-6
    max_iter: int | None = None
    armijo: float = 1e-4

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidArgument(f"tol must be positive, got {self.tol!r}")
        if self.max_iter is not None and int(self.max_iter) < 1:
            raise InvalidArgument(f"max_iter must be positive, got {self.max_iter!r}")


@dataclass
class TrainingDiagnostics:
    iterations: int
    residual: float
    converged: bool
    objective: float
    flags: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"iterations": int(self.iterations), "residual": float(self.residual),
                "converged": bool(self.converged), "objective": float(self.objective),
                "flags": dict(self.flags)}

    @classmethod
    def from_record(cls, record: dict) -> "TrainingDiagnostics":
        return cls(iterations=int(record["iterations"]), residual=float(record["residual"]),
                   converged=bool(record["converged"]), objective=float(record["objective"]),
                   flags=dict(record.get("flags", {})))


def box_bounds(hp: Hyperparameters, y: np.ndarray) -> np.ndarray:
    """Per-sample slack weight C_i: eta*(1-tau) on safe samples, eta*tau on
    unsafe ones.  These are the box constraints of the dual problems."""
    y = np.asarray(y)
    return np.where(y > 0, hp.eta * (1.0 - hp.tau), hp.eta * hp.tau)


class ScalableModel:
    """Base for the trained variants; subclasses provide ``margin``."""

    hyperparameters: Hyperparameters
    kernel: KernelSpec
    diagnostics: TrainingDiagnostics

    def margin(self, x: np.ndarray) -> np.ndarray:
        """Level-free decision core s(x); f(x, rho) = link(s(x) + rho)."""
        raise NotImplementedError

    def _link(self, t: np.ndarray) -> np.ndarray:
        return t

    def decision_value(self, x: np.ndarray, rho: float) -> np.ndarray:
        """f(x, rho); negative means x is in the predicted-safe region."""
        return self._link(self.margin(x) + rho)

    def boundary_radius(self, x: np.ndarray) -> np.ndarray:
        """Unique level at which each point sits exactly on the boundary."""
        return -self.margin(x)

    def predict(self, x: np.ndarray, rho: float) -> np.ndarray:
        """+1 inside the region (f < 0), -1 outside; f == 0 counts as unsafe."""
        f = self.decision_value(x, rho)
        return np.where(f < 0.0, 1, -1)


def predict(model: ScalableModel, x: np.ndarray, rho: float) -> np.ndarray:
    return model.predict(x, rho)


def decision_value(model: ScalableModel, x: np.ndarray, rho: float) -> np.ndarray:
    return model.decision_value(x, rho)


def boundary_radius(model: ScalableModel, x: np.ndarray) -> np.ndarray:
    return model.boundary_radius(x)


def _as_points(x: np.ndarray, dim: int) -> tuple[np.ndarray, bool]:
    """Normalize to (n, dim); report whether the input was a single point."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != dim:
        raise InvalidArgument(f"expected points with {dim} features, got shape {arr.shape}")
    return arr, single


def _chunked_kernel_apply(spec: KernelSpec, x: np.ndarray, ref: np.ndarray,
                          coef: np.ndarray) -> np.ndarray:
    """Compute kernel_matrix(x, ref) @ coef in row blocks."""
    from .kernels import kernel_matrix

    n = x.shape[0]
    if n <= PREDICT_CHUNK:
        return kernel_matrix(spec, x, ref) @ coef
    out = np.empty(n)
    for start in range(0, n, PREDICT_CHUNK):
        stop = min(start + PREDICT_CHUNK, n)
        out[start:stop] = kernel_matrix(spec, x[start:stop], ref) @ coef
    return out


_MODEL_FORMAT_VERSION = 1


def model_to_record(model: ScalableModel) -> dict:
    """Serialize a trained model to a flat, JSON-ready record."""
    record = {
        "format_version": _MODEL_FORMAT_VERSION,
        "variant": model.variant,
        "eta": model.hyperparameters.eta,
        "tau": model.hyperparameters.tau,
        "kernel": model.kernel.to_record(),
        "diagnostics": model.diagnostics.to_record(),
    }
    record.update(model._payload())
    return record


def model_from_record(record: dict) -> ScalableModel:
    """Rebuild a trained model from its record; inverse of model_to_record."""
    from .logistic import ScLrModel
    from .svdd import ScSvddModel
    from .svm import ScSvmModel

    version = record.get("format_version")
    if version != _MODEL_FORMAT_VERSION:
        raise InvalidArgument(f"unsupported model format version {version!r}")
    variant = record.get("variant")
    table = {"svm": ScSvmModel, "svdd": ScSvddModel, "lr": ScLrModel}
    if variant not in table:
        raise InvalidArgument(f"unknown model variant {variant!r}")
    kernel = KernelSpec.from_record(record["kernel"])
    hp = Hyperparameters(eta=float(record["eta"]), tau=float(record["tau"]), kernel=kernel)
    diagnostics = TrainingDiagnostics.from_record(record["diagnostics"])
    return table[variant]._from_payload(record, hp, kernel, diagnostics)


def save_model(model: ScalableModel, path, certificate=None) -> None:
    """Write a model record (optionally with its certificate) as JSON."""
    record = model_to_record(model)
    if certificate is not None:
        record["certificate"] = certificate.to_record()
    Path(path).write_text(json.dumps(record, sort_keys=True, indent=1) + "\n")


def load_model(path) -> tuple[ScalableModel, object | None]:
    """Read back a model record; returns (model, certificate-or-None)."""
    from .scaling import CalibrationCertificate

    record = json.loads(Path(path).read_text())
    certificate = None
    if "certificate" in record:
        certificate = CalibrationCertificate.from_record(record["certificate"])
    return model_from_record(record), certificate
