"""Input checks shared by the trainers."""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgument, TrainingError


def training_arrays(train, require_both_classes: bool = True):
    """Validate a training set and return (x, y) as float/int arrays."""
    x = np.asarray(train.x, dtype=float)
    y = np.asarray(train.y)
    if x.ndim != 2 or x.shape[0] == 0:
        raise InvalidArgument(f"training points must form a non-empty 2-D array, got {x.shape}")
    if y.shape != (x.shape[0],):
        raise InvalidArgument(f"labels of shape {y.shape} do not match {x.shape[0]} points")
    if not np.isfinite(x).all():
        raise InvalidArgument("training points contain non-finite values")
    if not np.isin(y, (-1, 1)).all():
        raise InvalidArgument("labels must be +1 or -1")
    if require_both_classes and ((y > 0).all() or (y < 0).all()):
        raise TrainingError("training set contains a single class")
    return x, y.astype(int)
