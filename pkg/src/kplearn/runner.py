"""Config-driven experiment protocols shared by the command-line tool.

A run is described by a plain mapping (parsed from YAML): dataset,
method(s), dictionary, kernel, output structure, regularization, and the
protocol-specific sections (cv, corruption, dictlearn, predict).  The
config is validated up front — unknown keys are rejected and nothing is
written on a validation failure — and all randomness flows from named
seeds, so repeated invocations are deterministic.
"""

import json
import time
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from pathlib import Path

import numpy as np
import pandas as pd

from . import _accel, io
from .baselines import fit_ke
from .datasets import CorruptionSpec, ToyConfig, ToyGenerator, center_outputs, \
    corrupt, kfold_cv, standardize_channels, train_test_split
from .dictionaries import make_fourier, make_rff, make_wavelet
from .dictlearn import DlProblem, learn_dictionary
from .functions import PartialSample, SampledFunction, mse, resample, snr, \
    trapezoid_quadrature, uniform_trapezoid
from .iterative import GroundLoss, fit_iterative
from .kernels import ScalarKernel, build_B, kernel_matrix
from .ridge import fit_ridge_full, fit_ridge_persample_gram, fit_ridge_plugin


class ConfigError(ValueError):
    """The experiment config is malformed."""


METHOD_NAMES = ("ridge_full", "ridge_plugin", "ridge_persample", "iterative",
                "ke", "1be")


def _check_keys(section, mapping, allowed, required=()):
    if not isinstance(mapping, dict):
        raise ConfigError("%s must be a mapping" % section)
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ConfigError("%s: unknown keys %s" % (section, sorted(unknown)))
    missing = set(required) - set(mapping)
    if missing:
        raise ConfigError("%s: missing keys %s" % (section, sorted(missing)))


def _validate_lambda(spec, section):
    _check_keys(section, spec, ("value", "values", "grid", "schedule", "c"))
    forms = [k for k in ("value", "values", "grid", "schedule") if k in spec]
    if len(forms) != 1:
        raise ConfigError("%s: give exactly one of value/values/grid/schedule"
                          % section)
    if "schedule" in spec:
        if spec["schedule"] != "prop4":
            raise ConfigError("%s: unknown schedule %r" % (section, spec["schedule"]))
        if "c" not in spec:
            raise ConfigError("%s: schedule prop4 needs c" % section)
    if "grid" in spec:
        _check_keys(section + ".grid", spec["grid"], ("start", "stop", "num"),
                    ("start", "stop", "num"))


def _validate_method(spec, section):
    _check_keys(section, spec,
                ("name", "label", "lambda", "loss", "view", "bandwidth"),
                ("name",))
    name = spec["name"]
    if name not in METHOD_NAMES:
        raise ConfigError("%s: unknown method %r" % (section, name))
    if name == "ke":
        if "bandwidth" not in spec:
            raise ConfigError("%s: ke needs a bandwidth" % section)
        _check_keys(section + ".bandwidth", spec["bandwidth"],
                    ("value", "values", "grid"))
    else:
        if "lambda" not in spec:
            raise ConfigError("%s: %s needs a lambda" % (section, name))
        _validate_lambda(spec["lambda"], section + ".lambda")
    if name == "iterative":
        loss = spec.get("loss", {})
        _check_keys(section + ".loss", loss,
                    ("variant", "gamma", "tol", "max_iter"))
        if loss.get("variant", "square") not in ("square", "logcosh"):
            raise ConfigError("%s: unknown loss" % section)
        if spec.get("view", "partial") not in ("partial", "full"):
            raise ConfigError("%s: view must be partial or full" % section)
    elif "loss" in spec or "view" in spec:
        raise ConfigError("%s: loss/view apply to the iterative method only"
                          % section)


def validate_config(raw):
    """Validate a raw config mapping; returns it unchanged on success."""
    _check_keys("config", raw,
                ("seed", "threads", "quadrature", "dataset", "method",
                 "methods", "dictionary", "kernel", "b", "preprocess", "cv",
                 "corruption", "predict", "dictlearn", "evaluate"))

    if "dataset" in raw:
        ds = raw["dataset"]
        _check_keys("dataset", ds,
                    ("kind", "n_train", "n_test", "toy", "inputs", "outputs",
                     "input_format", "test_inputs", "test_outputs", "domain"),
                    ("kind",))
        if ds["kind"] == "toy":
            _check_keys("dataset.toy", ds.get("toy", {}),
                        ("r", "lengthscales", "sigma_x", "input_grid",
                         "output_grid", "gp_seed", "sample_seed"))
            if "n_train" not in ds:
                raise ConfigError("dataset: toy needs n_train")
        elif ds["kind"] == "csv":
            for key in ("inputs", "outputs"):
                if key not in ds:
                    raise ConfigError("dataset: csv needs %s" % key)
            if ds.get("input_format", "vector") not in ("vector", "matrix"):
                raise ConfigError("dataset: input_format must be vector or matrix")
        else:
            raise ConfigError("dataset.kind must be toy or csv")

    if "method" in raw and "methods" in raw:
        raise ConfigError("give either method or methods, not both")
    if "method" in raw:
        _validate_method(raw["method"], "method")
    if "methods" in raw:
        if not isinstance(raw["methods"], list) or not raw["methods"]:
            raise ConfigError("methods must be a nonempty list")
        for i, spec in enumerate(raw["methods"]):
            _validate_method(spec, "methods[%d]" % i)

    if "dictionary" in raw:
        spec = raw["dictionary"]
        _check_keys("dictionary", spec,
                    ("family", "frequencies", "vanishing_moments", "levels",
                     "lengthscale", "d", "seed", "path", "atoms", "tau"),
                    ("family",))
        family = spec["family"]
        if family == "fourier" and "frequencies" not in spec:
            raise ConfigError("dictionary: fourier needs frequencies")
        if family == "wavelet" and ("vanishing_moments" not in spec
                                    or "levels" not in spec):
            raise ConfigError("dictionary: wavelet needs vanishing_moments "
                              "and levels")
        if family == "rff" and ("lengthscale" not in spec or "d" not in spec):
            raise ConfigError("dictionary: rff needs lengthscale and d")
        if family == "learned" and "path" not in spec and "atoms" not in spec:
            raise ConfigError("dictionary: learned needs path or atoms")
        if family not in ("fourier", "wavelet", "rff", "learned"):
            raise ConfigError("dictionary: unknown family %r" % family)

    if "kernel" in raw:
        _check_keys("kernel", raw["kernel"], ("variant", "sigma"),
                    ("variant", "sigma"))
        if raw["kernel"]["variant"] not in ScalarKernel.VARIANTS:
            raise ConfigError("kernel: unknown variant %r"
                              % raw["kernel"]["variant"])

    if "b" in raw:
        _check_keys("b", raw["b"], ("variant", "b"), ("variant",))
        if raw["b"]["variant"] not in ("identity", "diagonal_scale"):
            raise ConfigError("b: unknown variant %r" % raw["b"]["variant"])

    if "preprocess" in raw:
        _check_keys("preprocess", raw["preprocess"],
                    ("center_outputs", "standardize_channels"))
    if "quadrature" in raw:
        _check_keys("quadrature", raw["quadrature"], ("nodes",))
    if "cv" in raw:
        _check_keys("cv", raw["cv"], ("folds", "seed"))
    if "corruption" in raw:
        _check_keys("corruption", raw["corruption"],
                    ("variant", "levels", "repeats", "seed"),
                    ("variant", "levels"))
        if raw["corruption"]["variant"] not in CorruptionSpec.VARIANTS:
            raise ConfigError("corruption: unknown variant %r"
                              % raw["corruption"]["variant"])
    if "predict" in raw:
        _check_keys("predict", raw["predict"],
                    ("model", "inputs", "input_format", "grid"))
    if "evaluate" in raw:
        _check_keys("evaluate", raw["evaluate"],
                    ("model", "inputs", "outputs", "input_format", "domain"))
    if "dictlearn" in raw:
        _check_keys("dictlearn", raw["dictlearn"],
                    ("atoms", "tau", "grid", "max_rounds", "seed"))
    return raw


def load_config(path):
    import yaml

    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raw = {}
    return validate_config(raw)


# ---------------------------------------------------------------------------
# Construction helpers


def build_dictionary(spec, train=None, quadrature=None):
    """Build the configured dictionary; learned families may need data."""
    family = spec["family"]
    if family == "fourier":
        return make_fourier(spec["frequencies"])
    if family == "wavelet":
        return make_wavelet(spec["vanishing_moments"], spec["levels"])
    if family == "rff":
        return make_rff(spec["lengthscale"], spec["d"], spec.get("seed", 0))
    if "path" in spec:
        return io.load_dictionary(spec["path"])
    if train is None:
        raise ConfigError("learned dictionary needs training outputs")
    if quadrature is None:
        quadrature = trapezoid_quadrature(train.outputs[0].locations)
    problem = DlProblem.from_sample(train, quadrature, spec["atoms"],
                                    spec.get("tau", 0.01))
    return learn_dictionary(problem, spec.get("seed", 0)).dictionary


def build_kernel(spec):
    return ScalarKernel(spec["variant"], spec["sigma"])


def build_b(spec, dictionary):
    if spec is None:
        return build_B("identity", dictionary)
    return build_B(spec["variant"], dictionary, b=spec.get("b"))


def resolve_lambda(spec, n, d):
    """Resolve a lambda spec to one value for a fit of size (n, d)."""
    if "value" in spec:
        return float(spec["value"])
    if "schedule" in spec:
        return float(spec["c"]) * np.sqrt(d) / np.sqrt(n)
    raise ConfigError("lambda grids are only valid under cv")


def _geometric_grid(grid_spec):
    return list(np.geomspace(float(grid_spec["start"]),
                             float(grid_spec["stop"]),
                             int(grid_spec["num"])))


def _scalar_axis(spec, key):
    """Values of one expandable scalar config entry (grid/values/value)."""
    if "grid" in spec:
        return _geometric_grid(spec["grid"])
    if "values" in spec:
        return [float(v) for v in spec["values"]]
    return [float(spec[key])] if key in spec else [None]


class MeanShifted:
    """Wrap a model so predictions re-add the training mean function."""

    def __init__(self, model, mean):
        self.model = model
        self.mean = mean
        self.fit_info = getattr(model, "fit_info", {})

    def predict(self, x, targets):
        raw = self.model.predict(x, targets)
        shift = resample(self.mean, raw.locations).values
        return SampledFunction(raw.locations, raw.values + shift)

    def predict_many(self, inputs, targets_list):
        return [self.predict(x, t) for x, t in zip(inputs, targets_list)]


def fit_single(method_spec, train, dictionary, kernel, b, quadrature, *,
               kx=None, center=False):
    """Fit one configured method on a training sample.

    Returns the fitted model (mean-shift wrapped when centering is on).
    """
    name = method_spec["name"]
    mean = None
    if center:
        train, mean = center_outputs(train)

    if name == "ke":
        bw = method_spec["bandwidth"]
        if "value" not in bw:
            raise ConfigError("ke bandwidth must be a single value at fit time")
        model = fit_ke(train, float(bw["value"]))
    else:
        d = dictionary.d
        lam = resolve_lambda(method_spec["lambda"], len(train), d)
        if name in ("ridge_plugin", "1be"):
            if name == "1be":
                if dictionary.family != "fourier":
                    raise ConfigError("1be requires an orthonormal fourier "
                                      "dictionary")
                b = build_B("identity", dictionary)
            model = fit_ridge_plugin(train, dictionary, kernel, b, lam,
                                     quadrature=quadrature, kx=kx)
        elif name == "ridge_full":
            grid_q = trapezoid_quadrature(train.outputs[0].locations)
            model = fit_ridge_full(train, dictionary, kernel, b, grid_q, lam,
                                   kx=kx)
        elif name == "ridge_persample":
            model = fit_ridge_persample_gram(train, dictionary, kernel, b,
                                             lam, kx=kx)
        elif name == "iterative":
            loss_spec = method_spec.get("loss", {})
            variant = loss_spec.get("variant", "square")
            loss = (GroundLoss.square() if variant == "square"
                    else GroundLoss.logcosh(loss_spec.get("gamma", 1.0)))
            model = fit_iterative(train, dictionary, kernel, b, lam, loss,
                                  view=method_spec.get("view", "partial"),
                                  tol=loss_spec.get("tol", 1e-7),
                                  max_iter=loss_spec.get("max_iter", 2000),
                                  kx=kx)
        else:
            raise ConfigError("unknown method %r" % name)

    if mean is not None:
        return MeanShifted(model, mean)
    return model


def method_label(spec):
    if "label" in spec:
        return spec["label"]
    name = spec["name"]
    if name == "iterative":
        loss = spec.get("loss", {})
        variant = loss.get("variant", "square")
        if variant == "logcosh":
            return "iterative_logcosh"
        return "iterative_square"
    return name


# ---------------------------------------------------------------------------
# Data loading


def load_dataset(config, seed=None):
    """Materialize (train, test, generator) from the dataset section.

    ``test`` is None when the config provides no test data; ``generator``
    is the toy generator when applicable (needed for label noise).
    """
    ds = config["dataset"]
    if ds["kind"] == "toy":
        toy_spec = dict(ds.get("toy", {}))
        if seed is not None:
            toy_spec["sample_seed"] = seed
        toy = ToyConfig(**toy_spec)
        generator = ToyGenerator(toy)
        n_train = int(ds["n_train"])
        n_test = int(ds.get("n_test", 0))
        train = generator.generate(n_train)
        test = None
        if n_test:
            test_seed = np.random.SeedSequence((toy.sample_seed, 1))
            test = generator.generate(n_test, seed=test_seed)
        return train, test, generator

    functions, _, domain = io.read_output_functions(
        ds["outputs"], domain=tuple(ds["domain"]) if "domain" in ds else None)
    if ds.get("input_format", "vector") == "matrix":
        inputs, _ = io.read_matrix_inputs(ds["inputs"])
    else:
        inputs, _ = io.read_vector_inputs(ds["inputs"])
    sample = PartialSample(inputs, functions)
    if "test_inputs" in ds and "test_outputs" in ds:
        test_fns, _, _ = io.read_output_functions(ds["test_outputs"],
                                                  domain=domain)
        if ds.get("input_format", "vector") == "matrix":
            test_inputs, _ = io.read_matrix_inputs(ds["test_inputs"])
        else:
            test_inputs, _ = io.read_vector_inputs(ds["test_inputs"])
        return sample, PartialSample(test_inputs, test_fns), None
    if "n_train" in ds and int(ds["n_train"]) < len(sample):
        train, test = train_test_split(sample, int(ds["n_train"]),
                                       seed=seed if seed is not None else 0)
        return train, test, None
    return sample, None, None


def _gram_quadrature(config):
    nodes = config.get("quadrature", {}).get("nodes", 1001)
    return uniform_trapezoid(int(nodes))


# ---------------------------------------------------------------------------
# Protocols


def run_fit(config, out_dir, seed=None):
    """Fit the configured method once; write model files and a report."""
    method = config.get("method")
    if method is None:
        raise ConfigError("fit needs a method section")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    train, test, _ = load_dataset(config, seed=seed)
    pre = config.get("preprocess", {})
    stats = None
    if pre.get("standardize_channels"):
        raw_train_inputs = train.inputs
        std_train, stats = standardize_channels(raw_train_inputs)
        train = PartialSample(std_train, train.outputs)
        if test is not None:
            std_test, _ = standardize_channels(raw_train_inputs,
                                               apply_to=test.inputs)
            test = PartialSample(std_test, test.outputs)
    center = bool(pre.get("center_outputs"))

    quadrature = _gram_quadrature(config)
    dictionary = None
    kx = None
    if method["name"] != "ke":
        if "dictionary" not in config or "kernel" not in config:
            raise ConfigError("fit needs dictionary and kernel sections")
        dictionary = build_dictionary(config["dictionary"], train=train)
        kernel = build_kernel(config["kernel"])
        b = build_b(config.get("b"), dictionary)
        kx = kernel_matrix(kernel, train.inputs)
    else:
        kernel = b = None
    t_pre = time.perf_counter() - t0

    t1 = time.perf_counter()
    model = fit_single(method, train, dictionary, kernel, b, quadrature,
                       kx=kx, center=center)
    t_fit = time.perf_counter() - t1

    t2 = time.perf_counter()
    train_targets = [f.locations for f in train.outputs]
    train_preds = model.predict_many(train.inputs, train_targets)
    train_mse = mse(train_preds, train.outputs)
    test_mse = None
    if test is not None:
        test_preds = model.predict_many(test.inputs,
                                        [f.locations for f in test.outputs])
        test_mse = mse(test_preds, test.outputs)
    t_predict = time.perf_counter() - t2

    extras = {}
    inner = model.model if isinstance(model, MeanShifted) else model
    if isinstance(model, MeanShifted):
        extras["mean_function"] = {
            "locations": model.mean.locations.tolist(),
            "values": model.mean.values.tolist(),
        }
    if stats is not None:
        extras["channel_stats"] = {"avg": stats[0].tolist(),
                                   "std": stats[1].tolist()}
    if method["name"] != "ke":
        io.save_model(out / "model", inner, extras=extras)

    report = {
        "method": method_label(method),
        "n_train": len(train),
        "train_mse": train_mse,
        "test_mse": test_mse,
        "timings": {"preprocess": t_pre, "fit": t_fit, "predict": t_predict},
        "backend": _accel.BACKEND,
    }
    if method["name"] != "ke":
        report["lambda"] = inner.lam
        report["d"] = dictionary.d
        if getattr(inner, "fit_info", None):
            report["fit_info"] = {k: v for k, v in inner.fit_info.items()
                                  if k != "trace"}
    with open(out / "fit_report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    return report


def expand_method_grid(config, method):
    """Expand grid/values entries of one method spec into concrete specs."""
    axes = []
    if method["name"] == "ke":
        axes.append(("bandwidth", _scalar_axis(method["bandwidth"], "value")))
    else:
        lam = method["lambda"]
        if "grid" in lam or "values" in lam:
            axes.append(("lambda", _scalar_axis(lam, "value")))
        else:
            axes.append(("lambda", [None]))
    gammas = None
    if method["name"] == "iterative":
        gamma = method.get("loss", {}).get("gamma")
        if isinstance(gamma, list):
            gammas = [float(g) for g in gamma]
    axes.append(("gamma", gammas if gammas else [None]))

    specs = []
    for values in product(*(vals for _, vals in axes)):
        spec = json.loads(json.dumps(method))
        named = dict(zip((name for name, _ in axes), values))
        if named.get("lambda") is not None:
            spec["lambda"] = {"value": named["lambda"]}
        if named.get("bandwidth") is not None:
            spec["bandwidth"] = {"value": named["bandwidth"]}
        if named.get("gamma") is not None:
            spec.setdefault("loss", {})["gamma"] = named["gamma"]
        specs.append(spec)
    return specs


def run_cv(config, out_dir, seed=None):
    """Cross-validate the method grid; write scores and refit the best."""
    method = config.get("method")
    if method is None:
        raise ConfigError("cv needs a method section")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cv_spec = config.get("cv", {})
    folds = int(cv_spec.get("folds", 5))
    cv_seed = int(cv_spec.get("seed", 0))

    train, _, _ = load_dataset(config, seed=seed)
    quadrature = _gram_quadrature(config)
    pre = config.get("preprocess", {})
    center = bool(pre.get("center_outputs"))

    dictionary = None
    kernel = b = None
    if method["name"] != "ke":
        dictionary = build_dictionary(config["dictionary"], train=train)
        kernel = build_kernel(config["kernel"])
        b = build_b(config.get("b"), dictionary)

    learned_fresh = (config.get("dictionary", {}).get("family") == "learned"
                     and "path" not in config.get("dictionary", {}))

    def fitter(fold_train, spec):
        if learned_fresh:
            fold_dict = build_dictionary(config["dictionary"],
                                         train=fold_train)
            fold_b = build_b(config.get("b"), fold_dict)
        else:
            fold_dict, fold_b = dictionary, b
        return fit_single(spec, fold_train, fold_dict, kernel, fold_b,
                          quadrature, center=center)

    specs = expand_method_grid(config, method)
    best, scores = kfold_cv(train, folds, specs, fitter, seed=cv_seed)

    rows = []
    for spec, score in zip(specs, scores):
        row = {"method": method_label(spec), "score": score}
        if spec["name"] == "ke":
            row["bandwidth"] = spec["bandwidth"]["value"]
        else:
            row["lambda"] = resolve_lambda(spec["lambda"],
                                           len(train) - len(train) // folds,
                                           dictionary.d if dictionary else 0)
            gamma = spec.get("loss", {}).get("gamma")
            if gamma is not None:
                row["gamma"] = gamma
        rows.append(row)
    pd.DataFrame(rows).to_csv(out / "cv_scores.csv", index=False)
    with open(out / "cv_best.json", "w") as fh:
        json.dump({"best": best, "folds": folds, "seed": cv_seed}, fh, indent=2)

    refit = dict(config)
    refit["method"] = best
    refit.pop("methods", None)
    report = run_fit(refit, out_dir, seed=seed)
    return best, scores, report


def _corruption_levels(config):
    spec = config["corruption"]
    return [float(lv) for lv in spec["levels"]]


def _run_cell(config, method, level, repeat, quadrature):
    """One robustness cell: regenerate, corrupt, fit, evaluate."""
    ds_seed = int(config.get("seed", 0))
    corr = config["corruption"]
    train_seed = int(np.random.SeedSequence((ds_seed, repeat, 0))
                     .generate_state(1)[0])
    train, test, generator = load_dataset(config, seed=train_seed)
    if test is None:
        raise ConfigError("robustness needs test data (n_test or test files)")

    variant = corr["variant"]
    corr_seed = np.random.SeedSequence(
        (int(corr.get("seed", 0)), repeat, int(round(level * 10 ** 9))))
    corr_rng_seed = int(corr_seed.generate_state(1)[0])
    if variant == "local_noise":
        spec = CorruptionSpec(variant, sigma=level, seed=corr_rng_seed)
    else:
        spec = CorruptionSpec(variant, fraction=level, seed=corr_rng_seed)
    corrupted = corrupt(train, spec, generator=generator)

    level_snr = np.nan
    if variant == "local_noise" and level > 0:
        level_snr = snr(corrupted, level)

    dictionary = None
    kernel = b = None
    if method["name"] != "ke":
        dictionary = build_dictionary(config["dictionary"], train=corrupted)
        kernel = build_kernel(config["kernel"])
        b = build_b(config.get("b"), dictionary)
    center = bool(config.get("preprocess", {}).get("center_outputs"))
    model = fit_single(method, corrupted, dictionary, kernel, b, quadrature,
                       center=center)
    preds = model.predict_many(test.inputs,
                               [f.locations for f in test.outputs])
    return mse(preds, test.outputs), level_snr


def run_robustness(config, out_dir, seed=None, threads=1):
    """Corruption sweep: levels x repeats x methods, clean-test MSE."""
    if "corruption" not in config:
        raise ConfigError("robustness needs a corruption section")
    methods = config.get("methods")
    if not methods:
        method = config.get("method")
        if method is None:
            raise ConfigError("robustness needs method or methods")
        methods = [method]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if seed is not None:
        config = dict(config)
        config["seed"] = seed

    corr = config["corruption"]
    levels = _corruption_levels(config)
    repeats = int(corr.get("repeats", 10))
    quadrature = _gram_quadrature(config)

    cells = [(m, lv, rep) for lv in levels for m in methods
             for rep in range(repeats)]

    def work(cell):
        method, level, rep = cell
        try:
            value, level_snr = _run_cell(config, method, level, rep, quadrature)
            return value, level_snr, ""
        except Exception as exc:  # recorded, sweep continues
            return np.nan, np.nan, "%s: %s" % (type(exc).__name__, exc)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, cells))
    else:
        outcomes = [work(c) for c in cells]

    runs = []
    for (method, level, rep), (value, level_snr, note) in zip(cells, outcomes):
        runs.append({"corruption": corr["variant"], "level": level,
                     "snr": level_snr, "method": method_label(method),
                     "repeat": rep, "mse": value, "note": note})
    runs_frame = pd.DataFrame(runs)
    runs_frame.to_csv(out / "runs.csv", index=False)

    summary = []
    for level in levels:
        for method in methods:
            label = method_label(method)
            rows = runs_frame[(runs_frame["level"] == level)
                              & (runs_frame["method"] == label)]
            ok = rows[np.isfinite(rows["mse"])]
            notes = "; ".join(sorted(set(n for n in rows["note"] if n)))
            summary.append({
                "corruption": corr["variant"], "level": level,
                "snr": float(ok["snr"].mean()) if len(ok) else np.nan,
                "method": label,
                "mean_mse": float(ok["mse"].mean()) if len(ok) else np.nan,
                "std_mse": float(ok["mse"].std(ddof=0)) if len(ok) else np.nan,
                "n_runs": int(len(ok)),
                "note": notes,
            })
    pd.DataFrame(summary).to_csv(out / "robustness.csv", index=False)
    return summary


def run_dictlearn(config, out_dir, seed=None):
    """Learn a dictionary from training outputs; write atoms and trace."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = config.get("dictlearn", {})
    train, _, _ = load_dataset(config, seed=seed)
    grid = int(spec.get("grid", 0))
    if grid:
        quadrature = uniform_trapezoid(grid)
    else:
        quadrature = trapezoid_quadrature(train.outputs[0].locations)
    problem = DlProblem.from_sample(train, quadrature,
                                    int(spec.get("atoms", 30)),
                                    float(spec.get("tau", 0.01)),
                                    max_rounds=int(spec.get("max_rounds", 100)))
    result = learn_dictionary(problem, int(spec.get("seed", 0)))
    io.save_dictionary(out / "dictionary", result.dictionary,
                       nodes=quadrature.nodes)
    pd.DataFrame({"round": np.arange(len(result.objective_trace)),
                  "objective": result.objective_trace}).to_csv(
        out / "dictlearn_trace.csv", index=False)
    return result


def run_generate_toy(config, out_dir, seed=None):
    """Write the configured toy dataset as CSV files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, test, _ = load_dataset(config, seed=seed)
    io.write_vector_inputs(out / "train_inputs.csv", train.inputs)
    io.write_output_functions(out / "train_outputs.csv", train.outputs)
    if test is not None:
        io.write_vector_inputs(out / "test_inputs.csv", test.inputs)
        io.write_output_functions(out / "test_outputs.csv", test.outputs)
    return out


def run_predict(config, out_dir, seed=None):
    """Predict with a saved model on new inputs; write long-format CSV."""
    spec = config.get("predict")
    if spec is None or "model" not in spec or "inputs" not in spec:
        raise ConfigError("predict needs predict.model and predict.inputs")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, extras = io.load_model(spec["model"])
    if spec.get("input_format", "vector") == "matrix":
        inputs, ids = io.read_matrix_inputs(spec["inputs"])
    else:
        inputs, ids = io.read_vector_inputs(spec["inputs"])
    stats = extras.get("channel_stats")
    if stats:
        avg = np.asarray(stats["avg"])
        std = np.asarray(stats["std"])
        inputs = [(np.asarray(x, dtype=float) - avg) / std for x in inputs]
    grid = np.linspace(0.0, 1.0, int(spec.get("grid", 200)))
    wrapped = model
    mean_meta = extras.get("mean_function")
    if mean_meta:
        wrapped = MeanShifted(model, SampledFunction(mean_meta["locations"],
                                                     mean_meta["values"]))
    preds = wrapped.predict_many(inputs, [grid] * len(inputs))
    io.write_output_functions(out / "predictions.csv", preds, ids=ids)
    return out / "predictions.csv"


def run_evaluate(config, out_dir, seed=None):
    """Evaluate a saved model against observed outputs; write MSE JSON."""
    spec = config.get("evaluate")
    if spec is None:
        raise ConfigError("evaluate needs an evaluate section")
    for key in ("model", "inputs", "outputs"):
        if key not in spec:
            raise ConfigError("evaluate needs evaluate.%s" % key)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, extras = io.load_model(spec["model"])
    functions, _, _ = io.read_output_functions(
        spec["outputs"],
        domain=tuple(spec["domain"]) if "domain" in spec else None)
    if spec.get("input_format", "vector") == "matrix":
        inputs, _ = io.read_matrix_inputs(spec["inputs"])
    else:
        inputs, _ = io.read_vector_inputs(spec["inputs"])
    stats = extras.get("channel_stats")
    if stats:
        avg = np.asarray(stats["avg"])
        std = np.asarray(stats["std"])
        inputs = [(np.asarray(x, dtype=float) - avg) / std for x in inputs]
    wrapped = model
    mean_meta = extras.get("mean_function")
    if mean_meta:
        wrapped = MeanShifted(model, SampledFunction(mean_meta["locations"],
                                                     mean_meta["values"]))
    preds = wrapped.predict_many(inputs, [f.locations for f in functions])
    value = mse(preds, functions)
    with open(out / "evaluation.json", "w") as fh:
        json.dump({"mse": value, "n": len(functions)}, fh, indent=2)
    return value
