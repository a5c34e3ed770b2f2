"""Functional Nadaraya-Watson estimator used as a comparison baseline.

Predictions are kernel-weighted averages of the training outputs,

    sum_i K(S(x, x_i) / bandwidth) y_i / sum_i K(S(x, x_i) / bandwidth),

with a Gaussian window K(u) = exp(-u^2).  The semi-metric S is the
Euclidean distance for vector inputs and the root-mean-square distance
over shared locations for matrix-valued inputs.  When every weight
underflows to zero the prediction falls back to the nearest training
neighbor.
"""

import numpy as np

from .functions import SampledFunction, as_input_point, resample


def semi_metric(x0, x1):
    """Distance between two input points (vector or matrix form)."""
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    if x0.shape != x1.shape:
        raise ValueError("inputs must have the same shape")
    if x0.ndim == 2:
        return float(np.sqrt(np.mean(np.sum((x0 - x1) ** 2, axis=1))))
    return float(np.linalg.norm(x0 - x1))


class KeModel:
    """Stored training pairs plus a window bandwidth."""

    def __init__(self, sample, bandwidth):
        if bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if len(sample) < 1:
            raise ValueError("need at least one training pair")
        self.bandwidth = float(bandwidth)
        self.training_inputs = tuple(as_input_point(x) for x in sample.inputs)
        self.training_outputs = tuple(sample.outputs)

    def predict(self, x, targets):
        return ke_predict(self, x, targets)

    def predict_many(self, inputs, targets_list):
        return [ke_predict(self, x, t) for x, t in zip(inputs, targets_list)]


def fit_ke(sample, bandwidth):
    return KeModel(sample, bandwidth)


def ke_predict(model, x, targets):
    """Windowed average of the training outputs, resampled to ``targets``."""
    x = as_input_point(x)
    targets = np.asarray(targets, dtype=float)
    dists = np.array([semi_metric(x, xi) for xi in model.training_inputs])
    weights = np.exp(-((dists / model.bandwidth) ** 2))
    total = weights.sum()
    stacked = np.stack([resample(f, targets).values
                        for f in model.training_outputs])
    if total <= 0.0:
        values = stacked[int(np.argmin(dists))]
    else:
        values = (weights / total) @ stacked
    return SampledFunction(targets, values)
