"""Core value types for discretized functions on the unit interval.

Output functions live on Theta = [0, 1] (other compact intervals are
affinely rescaled at ingestion, see :mod:`kplearn.io`).  A function is
represented by its values at ordered observation locations; integrals
against the normalized Lebesgue measure are realized by quadrature
weights that sum to one.

All containers are frozen after construction and every operation is a
pure function, so instances can be shared freely across threads.
"""

import numpy as np


def _readonly(a, dtype=float, ndim=1):
    out = np.array(a, dtype=dtype)
    if out.ndim != ndim:
        raise ValueError("expected a %d-d array, got shape %s" % (ndim, out.shape))
    out.flags.writeable = False
    return out


class Quadrature:
    """Nodes and positive weights realizing the L2([0,1]) inner product.

    Parameters
    ----------
    nodes : array_like
        Strictly increasing locations in [0, 1].
    weights : array_like
        Positive weights, same length as ``nodes``, summing to 1.
    """

    __slots__ = ("nodes", "weights")

    def __init__(self, nodes, weights):
        nodes = _readonly(nodes)
        weights = _readonly(weights)
        if nodes.size != weights.size or nodes.size == 0:
            raise ValueError("nodes and weights must have equal, nonzero length")
        if nodes[0] < 0.0 or nodes[-1] > 1.0:
            raise ValueError("quadrature nodes must lie in [0, 1]")
        if nodes.size > 1 and not np.all(np.diff(nodes) > 0):
            raise ValueError("quadrature nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("quadrature weights must sum to 1")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __setattr__(self, name, value):
        raise AttributeError("Quadrature is immutable")

    def __len__(self):
        return self.nodes.size

    def __repr__(self):
        return "Quadrature(%d nodes on [%.3g, %.3g])" % (
            len(self), self.nodes[0], self.nodes[-1])


def trapezoid_quadrature(nodes):
    """Trapezoidal weights on an arbitrary grid, renormalized to unit mass.

    A single node gets weight 1.  Grids that do not span the whole of
    [0, 1] still produce unit-mass weights, which keeps discrete inner
    products comparable across observation patterns.
    """
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size == 1:
        return Quadrature(nodes, [1.0])
    gaps = np.diff(nodes)
    w = np.zeros(nodes.size)
    w[:-1] += 0.5 * gaps
    w[1:] += 0.5 * gaps
    return Quadrature(nodes, w / w.sum())


def uniform_trapezoid(num=1001):
    """Trapezoid rule on ``num`` equispaced nodes spanning [0, 1]."""
    return trapezoid_quadrature(np.linspace(0.0, 1.0, num))


def mean_quadrature(nodes):
    """Equal weights 1/m on the given nodes (Monte-Carlo weighting)."""
    nodes = np.asarray(nodes, dtype=float)
    return Quadrature(nodes, np.full(nodes.size, 1.0 / nodes.size))


class SampledFunction:
    """A real function observed at finitely many ordered locations."""

    __slots__ = ("locations", "values")

    def __init__(self, locations, values):
        locations = _readonly(locations)
        values = _readonly(values)
        if locations.size != values.size or locations.size == 0:
            raise ValueError("locations and values must have equal, nonzero length")
        if locations[0] < 0.0 or locations[-1] > 1.0:
            raise ValueError("locations must lie in [0, 1]")
        if locations.size > 1 and not np.all(np.diff(locations) > 0):
            raise ValueError("locations must be strictly increasing")
        object.__setattr__(self, "locations", locations)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("SampledFunction is immutable")

    def __len__(self):
        return self.locations.size

    def __repr__(self):
        return "SampledFunction(%d points on [%.3g, %.3g])" % (
            len(self), self.locations[0], self.locations[-1])


def as_input_point(x):
    """Validate and freeze one input point.

    Accepts a plain real vector or a (locations x channels) matrix of
    per-location channel values; every entry must be finite.
    """
    out = np.array(x, dtype=float)
    if out.ndim not in (1, 2):
        raise ValueError("input point must be a vector or a matrix")
    if out.size == 0:
        raise ValueError("input point must be nonempty")
    if not np.all(np.isfinite(out)):
        raise ValueError("input point entries must be finite")
    out.flags.writeable = False
    return out


class PartialSample:
    """Paired inputs and partially observed output functions.

    Attributes
    ----------
    inputs : tuple of ndarray
        One input point per sample (vectors or matrices, homogeneous).
    outputs : tuple of SampledFunction
        One observed output per sample; per-sample location counts may
        differ.
    """

    __slots__ = ("inputs", "outputs")

    def __init__(self, inputs, outputs):
        inputs = tuple(as_input_point(x) for x in inputs)
        outputs = tuple(outputs)
        if len(inputs) == 0 or len(inputs) != len(outputs):
            raise ValueError("inputs and outputs must have equal, nonzero length")
        for f in outputs:
            if not isinstance(f, SampledFunction):
                raise ValueError("outputs must be SampledFunction instances")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)

    def __setattr__(self, name, value):
        raise AttributeError("PartialSample is immutable")

    def __len__(self):
        return len(self.inputs)

    def subset(self, indices):
        return PartialSample([self.inputs[i] for i in indices],
                             [self.outputs[i] for i in indices])


def inner_product(f_values, g_values, q):
    """Discrete L2 inner product of two functions given on ``q.nodes``.

    Parameters
    ----------
    f_values, g_values : array_like
        Function values at the quadrature nodes.
    q : Quadrature

    Returns
    -------
    float
        sum_p w_p f(theta_p) g(theta_p).
    """
    f_values = np.asarray(f_values, dtype=float)
    g_values = np.asarray(g_values, dtype=float)
    if f_values.shape != (len(q),) or g_values.shape != (len(q),):
        raise ValueError("values must match the quadrature nodes in length")
    return float(np.dot(q.weights, f_values * g_values))


def resample(f, targets):
    """Evaluate a sampled function at new locations by linear interpolation.

    Every target must lie within the observed span of ``f``.
    """
    targets = np.asarray(targets, dtype=float)
    lo, hi = f.locations[0], f.locations[-1]
    if targets.size and (targets.min() < lo or targets.max() > hi):
        raise ValueError("resample target outside the observed span [%g, %g]" % (lo, hi))
    values = np.interp(targets, f.locations, f.values)
    order = np.argsort(targets, kind="stable")
    if targets.size > 1 and not np.all(np.diff(targets[order]) > 0):
        raise ValueError("resample targets must be distinct")
    return SampledFunction(targets[order], values[order])


def mse(predictions, observations):
    """Mean squared error between predicted and observed functions.

    Predictions are resampled onto each observation's locations when the
    grids differ; the result is the double average

        (1/n) sum_i (1/m_i) sum_p (pred_i(theta_ip) - y_ip)^2.
    """
    predictions = list(predictions)
    observations = list(observations)
    if not predictions or len(predictions) != len(observations):
        raise ValueError("need equally many predictions and observations, at least one")
    total = 0.0
    for pred, obs in zip(predictions, observations):
        if (len(pred) == len(obs)
                and np.array_equal(pred.locations, obs.locations)):
            pv = pred.values
        else:
            pv = resample(pred, obs.locations).values
        total += float(np.mean((pv - obs.values) ** 2))
    return total / len(predictions)


def snr(sample, sigma):
    """Signal-to-noise ratio of a sample against noise level ``sigma``.

    Computed as (1 / (sigma * n)) * sum_i mean_p |y_ip|.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    total = sum(float(np.mean(np.abs(f.values))) for f in sample.outputs)
    return total / (sigma * len(sample))
