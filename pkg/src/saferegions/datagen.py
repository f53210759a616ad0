"""Datasets, synthetic Gaussian sampling, splitting, and standardization.

Labels are +1 for safe and -1 for unsafe throughout.  All sampling is driven
by explicit seeds; the same spec and seed reproduce a dataset bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import InvalidArgument

__all__ = [
    "Dataset",
    "GaussianSpec",
    "sample_gaussian",
    "split_dataset",
    "Standardizer",
    "fit_standardizer",
    "standardize",
]


@dataclass
class Dataset:
    """Points, labels, and a provenance record describing where they came from."""

    x: np.ndarray
    y: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.x.ndim != 2:
            raise InvalidArgument(f"points must form a 2-D array, got shape {self.x.shape}")
        if self.y.shape != (self.x.shape[0],):
            raise InvalidArgument(
                f"labels of shape {self.y.shape} do not match {self.x.shape[0]} points")
        if self.y.size and not np.isin(self.y, (-1, 1)).all():
            raise InvalidArgument("labels must be +1 or -1")

    @property
    def n_samples(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def safe(self) -> "Dataset":
        return self.subset(np.flatnonzero(self.y == 1))

    def unsafe(self) -> "Dataset":
        return self.subset(np.flatnonzero(self.y == -1))

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices)
        return Dataset(self.x[indices].copy(), self.y[indices].copy(), dict(self.provenance))

    def to_csv(self, path) -> None:
        """Write points and labels as CSV with a feature header, plus a YAML
        provenance sidecar next to the file."""
        path = Path(path)
        header = [f"f{i}" for i in range(self.dim)] + ["label"]
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for row, label in zip(self.x, self.y):
                writer.writerow([repr(float(v)) for v in row] + [int(label)])
        sidecar = path.with_suffix(path.suffix + ".meta.yaml")
        sidecar.write_text(yaml.safe_dump(_plain(self.provenance), sort_keys=True))

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        path = Path(path)
        with path.open(newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or header[-1] != "label":
                raise InvalidArgument(f"{path}: expected a header ending in 'label'")
            dim = len(header) - 1
            xs, ys = [], []
            for row in reader:
                if len(row) != dim + 1:
                    raise InvalidArgument(f"{path}: row with {len(row)} fields, expected {dim + 1}")
                xs.append([float(v) for v in row[:dim]])
                ys.append(int(float(row[dim])))
        provenance = {"source": str(path)}
        sidecar = path.with_suffix(path.suffix + ".meta.yaml")
        if sidecar.exists():
            loaded = yaml.safe_load(sidecar.read_text())
            if isinstance(loaded, dict):
                provenance.update(loaded)
        x = np.asarray(xs, dtype=float) if xs else np.empty((0, dim))
        return cls(x, np.asarray(ys, dtype=int), provenance)


def _plain(obj):
    """Recursively convert numpy scalars/arrays so YAML stays readable."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


@dataclass(frozen=True)
class GaussianSpec:
    """Two-Gaussian mixture with optional label-preserving contamination.

    Each sample first draws its label (+1 with probability ``safe_prob``),
    then with probability ``outlier_prob`` the point itself comes from the
    *other* class's Gaussian while the label is kept, modelling mislabeled or
    contaminated data.
    """

    mu_safe: tuple
    mu_unsafe: tuple
    cov_safe: tuple
    cov_unsafe: tuple
    safe_prob: float = 0.5
    outlier_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.safe_prob < 1.0:
            raise InvalidArgument(f"safe_prob must lie in (0, 1), got {self.safe_prob!r}")
        if not 0.0 <= self.outlier_prob < 0.5:
            raise InvalidArgument(f"outlier_prob must lie in [0, 0.5), got {self.outlier_prob!r}")
        mu_s = np.asarray(self.mu_safe, dtype=float)
        mu_u = np.asarray(self.mu_unsafe, dtype=float)
        if mu_s.ndim != 1 or mu_s.shape != mu_u.shape:
            raise InvalidArgument("class means must be 1-D and share a dimension")
        for name in ("cov_safe", "cov_unsafe"):
            cov = np.asarray(getattr(self, name), dtype=float)
            if cov.shape != (mu_s.size, mu_s.size):
                raise InvalidArgument(f"{name} must be {mu_s.size}x{mu_s.size}")
            if not np.allclose(cov, cov.T):
                raise InvalidArgument(f"{name} must be symmetric")
            try:
                np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise InvalidArgument(f"{name} must be positive definite") from None

    @property
    def dim(self) -> int:
        return len(self.mu_safe)

    def to_record(self) -> dict:
        return {
            "mu_safe": list(map(float, self.mu_safe)),
            "mu_unsafe": list(map(float, self.mu_unsafe)),
            "cov_safe": np.asarray(self.cov_safe, dtype=float).tolist(),
            "cov_unsafe": np.asarray(self.cov_unsafe, dtype=float).tolist(),
            "safe_prob": self.safe_prob,
            "outlier_prob": self.outlier_prob,
        }


def sample_gaussian(spec: GaussianSpec, n: int, seed: int, role: str = "sample") -> Dataset:
    """Draw n labelled points from the mixture; n = 0 gives an empty dataset."""
    n = int(n)
    if n < 0:
        raise InvalidArgument(f"sample count must be non-negative, got {n}")
    rng = np.random.default_rng(seed)
    dim = spec.dim
    mu_s = np.asarray(spec.mu_safe, dtype=float)
    mu_u = np.asarray(spec.mu_unsafe, dtype=float)
    chol_s = np.linalg.cholesky(np.asarray(spec.cov_safe, dtype=float))
    chol_u = np.linalg.cholesky(np.asarray(spec.cov_unsafe, dtype=float))

    labels = np.where(rng.random(n) < spec.safe_prob, 1, -1)
    flipped = rng.random(n) < spec.outlier_prob
    source_safe = np.where(flipped, labels == -1, labels == 1)
    z = rng.standard_normal((n, dim))
    from_safe = z @ chol_s.T + mu_s
    from_unsafe = z @ chol_u.T + mu_u
    x = np.where(source_safe[:, None], from_safe, from_unsafe)
    provenance = {"generator": "gaussian", "seed": int(seed), "n": n, "role": role,
                  "spec": spec.to_record()}
    return Dataset(x, labels, provenance)


def split_dataset(data: Dataset, sizes: tuple[int, ...], seed: int) -> list[Dataset]:
    """Shuffle once and cut disjoint consecutive slices of the given sizes."""
    sizes = tuple(int(s) for s in sizes)
    if any(s < 0 for s in sizes):
        raise InvalidArgument(f"split sizes must be non-negative, got {sizes}")
    if sum(sizes) > data.n_samples:
        raise InvalidArgument(
            f"split sizes {sizes} need {sum(sizes)} samples, dataset has {data.n_samples}")
    order = np.random.default_rng(seed).permutation(data.n_samples)
    parts = []
    start = 0
    for k, size in enumerate(sizes):
        part = data.subset(order[start:start + size])
        part.provenance = dict(data.provenance)
        part.provenance.update({"split_seed": int(seed), "split_part": k})
        parts.append(part)
        start += size
    return parts


@dataclass
class Standardizer:
    """Per-feature affine map fitted on training data.

    Zero-variance features are flagged and mapped to 0; inverting restores
    the training mean for them.
    """

    mean: np.ndarray
    scale: np.ndarray
    degenerate: np.ndarray

    def apply(self, data):
        if isinstance(data, Dataset):
            out = Dataset(self.apply(data.x), data.y.copy(), dict(data.provenance))
            out.provenance["standardized"] = True
            return out
        x = np.atleast_2d(np.asarray(data, dtype=float))
        z = (x - self.mean) / self.scale
        if self.degenerate.any():
            z[:, self.degenerate] = 0.0
        return z

    def invert(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        return z * self.scale + self.mean

    @property
    def has_degenerate_features(self) -> bool:
        return bool(self.degenerate.any())


def fit_standardizer(train: Dataset) -> Standardizer:
    if train.n_samples == 0:
        raise InvalidArgument("cannot fit a standardizer on an empty dataset")
    mean = train.x.mean(axis=0)
    std = train.x.std(axis=0)
    degenerate = std == 0.0
    scale = np.where(degenerate, 1.0, std)
    return Standardizer(mean=mean, scale=scale, degenerate=degenerate)


def standardize(train: Dataset, *others: Dataset) -> tuple[list[Dataset], Standardizer]:
    """Fit on the training split, apply to all splits; returns the transformed
    datasets in the order given plus the fitted transform."""
    scaler = fit_standardizer(train)
    transformed = [scaler.apply(train)] + [scaler.apply(d) for d in others]
    return transformed, scaler
