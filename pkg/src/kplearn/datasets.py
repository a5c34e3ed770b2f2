"""Synthetic data generation, corruption injectors, preprocessing, and CV.

The synthetic generator draws r Gaussian-process paths once (fixed
across all datasets of a run) and emits samples whose input curves and
output functions share uniform random mixture coefficients: the input is
a B-spline mixture on [0, 5] plus observation noise, the output the
matching GP mixture on [0, 1].  Corruptions reproduce four training-data
failure modes: local outliers, label noise, missing observations, and
local noise.
"""

import warnings

import numpy as np

from .errors import NumericError
from .functions import PartialSample, SampledFunction, mse, resample


def bspline4(t):
    """Cardinal cubic B-spline on [0, 4] (closed-form piecewise cubic).

    Symmetric about t = 2 with peak value 2/3 there; zero outside [0, 4].
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = (t >= 0) & (t < 1)
    out[m] = t[m] ** 3 / 6.0
    m = (t >= 1) & (t < 2)
    out[m] = (-3.0 * t[m] ** 3 + 12.0 * t[m] ** 2 - 12.0 * t[m] + 4.0) / 6.0
    m = (t >= 2) & (t < 3)
    out[m] = (3.0 * t[m] ** 3 - 24.0 * t[m] ** 2 + 60.0 * t[m] - 44.0) / 6.0
    m = (t >= 3) & (t <= 4)
    out[m] = (4.0 - t[m]) ** 3 / 6.0
    return out


def bspline4_centered(t):
    """Width-1 version centered at 0: B4(4 t + 2)."""
    return bspline4(4.0 * np.asarray(t, dtype=float) + 2.0)


class ToyConfig:
    """Parameters of the synthetic generator."""

    def __init__(self, r=4, lengthscales=(0.1, 0.25, 0.1, 0.25), sigma_x=0.07,
                 input_grid=200, output_grid=200, input_span=(0.0, 5.0),
                 gp_seed=0, sample_seed=0):
        lengthscales = tuple(float(b) for b in lengthscales)
        if len(lengthscales) != r:
            raise ValueError("need one lengthscale per mixture component")
        if any(b <= 0 for b in lengthscales):
            raise ValueError("lengthscales must be positive")
        if sigma_x < 0:
            raise ValueError("sigma_x must be >= 0")
        self.r = int(r)
        self.lengthscales = lengthscales
        self.sigma_x = float(sigma_x)
        self.input_grid = int(input_grid)
        self.output_grid = int(output_grid)
        self.input_span = (float(input_span[0]), float(input_span[1]))
        self.gp_seed = int(gp_seed)
        self.sample_seed = int(sample_seed)


class ToyGenerator:
    """Holds the fixed GP paths and draws samples from them.

    The r paths are drawn once at construction from ``config.gp_seed``
    (Cholesky of the Gaussian-covariance Gram with 1e-10 jitter) and
    reused by every draw, so two samples with equal coefficients have
    equal noiseless outputs.
    """

    def __init__(self, config):
        self.config = config
        self.output_grid = np.linspace(0.0, 1.0, config.output_grid)
        lo, hi = config.input_span
        self.input_grid = np.linspace(lo, hi, config.input_grid)
        self.centers = np.arange(1, config.r + 1, dtype=float)
        self.spline_design = bspline4_centered(
            self.input_grid[:, None] - self.centers[None, :])

        rng = np.random.default_rng(config.gp_seed)
        m = config.output_grid
        diff = self.output_grid[:, None] - self.output_grid[None, :]
        paths = np.empty((m, config.r))
        for t, b in enumerate(config.lengthscales):
            cov = np.exp(-(diff / b) ** 2) + 1e-10 * np.eye(m)
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError as exc:
                raise NumericError("GP covariance not positive definite even "
                                   "after jitter (lengthscale %g)" % b) from exc
            paths[:, t] = chol @ rng.standard_normal(m)
        self.gp_paths = paths

    def sample_from_coefficients(self, coefficients, rng=None):
        """Sample with given mixture coefficients (test hook).

        Input noise is added only when an ``rng`` is supplied.
        """
        a = np.atleast_2d(np.asarray(coefficients, dtype=float))
        x = a @ self.spline_design.T
        if rng is not None and self.config.sigma_x > 0:
            x = x + rng.normal(0.0, self.config.sigma_x, size=x.shape)
        y = a @ self.gp_paths.T
        outputs = [SampledFunction(self.output_grid, row) for row in y]
        return PartialSample(list(x), outputs)

    def generate(self, n, seed=None):
        """Draw n samples; ``seed`` overrides the configured sample seed."""
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = np.random.default_rng(
            self.config.sample_seed if seed is None else seed)
        a = rng.uniform(-1.0, 1.0, size=(n, self.config.r))
        return self.sample_from_coefficients(a, rng=rng)

    def fresh_outputs(self, count, rng):
        """Output functions with independent coefficients (label noise)."""
        a = rng.uniform(-1.0, 1.0, size=(count, self.config.r))
        y = a @ self.gp_paths.T
        return [SampledFunction(self.output_grid, row) for row in y]


def generate_toy(config, n):
    """Fully gridded sample of size n from a fresh generator."""
    return ToyGenerator(config).generate(n)


class CorruptionSpec:
    """One corruption to inject into training outputs.

    variant: "local_outliers" | "label_noise" | "missing" (each with a
    fraction in [0,1]) or "local_noise" (with a noise level sigma >= 0).
    """

    VARIANTS = ("local_outliers", "label_noise", "missing", "local_noise")

    def __init__(self, variant, fraction=None, sigma=None, seed=0):
        if variant not in self.VARIANTS:
            raise ValueError("unknown corruption variant %r" % (variant,))
        if variant == "local_noise":
            if sigma is None or sigma < 0:
                raise ValueError("local_noise needs sigma >= 0")
            self.sigma = float(sigma)
            self.fraction = None
        else:
            if fraction is None or not 0.0 <= fraction <= 1.0:
                raise ValueError("%s needs a fraction in [0, 1]" % variant)
            self.fraction = float(fraction)
            self.sigma = None
        self.variant = variant
        self.seed = int(seed)


def corrupt(sample, spec, generator=None):
    """Return a corrupted copy of the sample (inputs always untouched).

    label_noise draws replacement output functions from ``generator``
    (a ToyGenerator), which is required for that variant.
    """
    rng = np.random.default_rng(spec.seed)
    outputs = list(sample.outputs)

    if spec.variant == "local_outliers":
        new = []
        for f in outputs:
            count = int(round(spec.fraction * len(f)))
            if count == 0:
                new.append(f)
                continue
            values = f.values.copy()
            idx = rng.choice(len(f), size=count, replace=False)
            lo, hi = float(values.min()), float(values.max())
            values[idx] = rng.uniform(lo, hi, size=count)
            new.append(SampledFunction(f.locations, values))
        outputs = new

    elif spec.variant == "label_noise":
        if generator is None:
            raise ValueError("label_noise needs the generating process "
                             "(pass generator=)")
        count = int(round(spec.fraction * len(outputs)))
        if count:
            idx = rng.choice(len(outputs), size=count, replace=False)
            fresh = generator.fresh_outputs(count, rng)
            for j, i in enumerate(idx):
                outputs[i] = fresh[j]

    elif spec.variant == "missing":
        new = []
        warned = False
        for f in outputs:
            drop = int(round(spec.fraction * len(f)))
            keep = len(f) - drop
            if keep < 1:
                keep = 1
                if not warned:
                    warnings.warn("missing fraction would empty a function; "
                                  "keeping one observation")
                    warned = True
            if keep == len(f):
                new.append(f)
                continue
            kept = np.sort(rng.choice(len(f), size=keep, replace=False))
            new.append(SampledFunction(f.locations[kept], f.values[kept]))
        outputs = new

    else:  # local_noise
        if spec.sigma > 0:
            outputs = [SampledFunction(f.locations,
                                       f.values + rng.normal(0.0, spec.sigma,
                                                             size=len(f)))
                       for f in outputs]

    return PartialSample(sample.inputs, outputs)


def center_outputs(train, apply_to=None):
    """Subtract the training mean function from a sample's outputs.

    The mean lives on the union of the training grids; at each union
    location it averages the training functions whose observed span
    covers that location.  Returns the centered sample and the mean
    function (to be added back to predictions).
    """
    union = np.unique(np.concatenate([f.locations for f in train.outputs]))
    sums = np.zeros(union.size)
    counts = np.zeros(union.size)
    for f in train.outputs:
        covered = (union >= f.locations[0]) & (union <= f.locations[-1])
        sums[covered] += np.interp(union[covered], f.locations, f.values)
        counts[covered] += 1
    if np.any(counts == 0):
        raise ValueError("some union locations are covered by no training function")
    mean = SampledFunction(union, sums / counts)

    target = train if apply_to is None else apply_to
    centered = [SampledFunction(f.locations,
                                f.values - resample(mean, f.locations).values)
                for f in target.outputs]
    return PartialSample(target.inputs, centered), mean


def standardize_channels(train_inputs, apply_to=None):
    """Standardize matrix-valued inputs channelwise with training statistics.

    Per channel, the mean and standard deviation pool every training
    sample and location (std denominator n_train * m - 1); channels with
    zero variance are clamped to std 1 with a warning.

    Returns (standardized inputs, (avg, std)); when ``apply_to`` is
    given, those inputs are standardized with the training statistics
    instead.
    """
    train_inputs = [np.asarray(x, dtype=float) for x in train_inputs]
    if any(x.ndim != 2 for x in train_inputs):
        raise ValueError("channel standardization needs matrix-valued inputs")
    pooled = np.concatenate(train_inputs, axis=0)
    if pooled.shape[0] < 2:
        raise ValueError("need at least two pooled rows per channel")
    avg = pooled.mean(axis=0)
    std = pooled.std(axis=0, ddof=1)
    zero = std == 0
    if np.any(zero):
        warnings.warn("zero-variance channel(s) %s; std clamped to 1"
                      % np.nonzero(zero)[0].tolist())
        std = np.where(zero, 1.0, std)
    target = train_inputs if apply_to is None else [np.asarray(x, dtype=float)
                                                    for x in apply_to]
    return [(x - avg) / std for x in target], (avg, std)


def train_test_split(sample, n_train, seed=0):
    """Deterministic shuffled split into (train, test)."""
    n = len(sample)
    if not 1 <= n_train < n:
        raise ValueError("n_train must be in [1, n)")
    perm = np.random.default_rng(seed).permutation(n)
    return sample.subset(perm[:n_train]), sample.subset(perm[n_train:])


def kfold_cv(sample, folds, configs, fitter, metric=None, seed=0):
    """Cross-validate a config grid with a generic fitting callable.

    Parameters
    ----------
    configs : list
        Arbitrary config objects, ordered from weakest to strongest
        regularization; exact score ties resolve to the later entry
        (stronger regularization).
    fitter : callable(train_sample, config) -> model
        The model must expose predict_many(inputs, targets_list).
    metric : callable(predictions, observations) -> float
        Defaults to mse.

    Returns
    -------
    (best_config, scores) with one averaged score per config.
    """
    configs = list(configs)
    if not configs:
        raise ValueError("config grid must be nonempty")
    if folds < 2:
        raise ValueError("need at least 2 folds")
    n = len(sample)
    if n < folds:
        raise ValueError("need at least as many samples as folds")
    if metric is None:
        metric = mse

    perm = np.random.default_rng(seed).permutation(n)
    parts = np.array_split(perm, folds)
    scores = np.zeros(len(configs))
    for held in parts:
        train_idx = np.setdiff1d(perm, held, assume_unique=True)
        train = sample.subset(train_idx)
        test = sample.subset(held)
        targets = [f.locations for f in test.outputs]
        for c, config in enumerate(configs):
            model = fitter(train, config)
            preds = model.predict_many(test.inputs, targets)
            scores[c] += metric(preds, test.outputs)
    scores /= folds

    best_score = scores.min()
    tied = np.nonzero(scores <= best_score * (1.0 + 1e-12) + 1e-300)[0]
    best = int(tied[-1])
    if len(configs) > 2 and best in (0, len(configs) - 1):
        warnings.warn("best config sits at the grid edge; widen the grid")
    return configs[best], scores
