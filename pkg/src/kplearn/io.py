"""CSV and JSON serialization for samples, dictionaries, and models.

Formats
-------
Output functions travel in long form: columns (sample_id, theta, value),
one row per observation; empty cells and NaNs are dropped at parse time,
which is how partially observed data enters.  Vector inputs are dense:
sample_id first, then one column per component, one row per sample.
Matrix-valued inputs reuse the long layout with one column per channel:
(sample_id, theta, c1..ck).

Output domains other than [0,1] are affinely mapped to [0,1] at
ingestion; the mapping is returned so downstream outputs can be mapped
back.

A fitted model is a JSON sidecar (kernel, output structure, lambda,
dictionary metadata) plus CSVs for alpha and the training inputs; a
learned dictionary additionally stores its atom values on its grid.
"""

import json

import numpy as np
import pandas as pd

from .dictionaries import from_grid, make_fourier, make_rff, make_wavelet
from .functions import SampledFunction
from .kernels import ScalarKernel, build_B
from .ridge import KplModel

FORMAT_DICTIONARY = "kplearn-dictionary"
FORMAT_MODEL = "kplearn-model"


def _map_to_unit(theta, domain):
    lo, hi = domain
    if hi <= lo:
        raise ValueError("domain must have positive length")
    return (theta - lo) / (hi - lo)


def _map_from_unit(theta, domain):
    lo, hi = domain
    return lo + theta * (hi - lo)


def read_output_functions(path, domain=None):
    """Read long-format output functions.

    Returns (functions, sample_ids, domain): functions ordered by
    sample_id, each a SampledFunction on [0,1].  When ``domain`` is
    omitted it is inferred: (0,1) if all locations already fit, else the
    observed (min, max).
    """
    frame = pd.read_csv(path)
    expected = ["sample_id", "theta", "value"]
    if list(frame.columns) != expected:
        raise ValueError("expected columns %s, got %s"
                         % (expected, list(frame.columns)))
    frame = frame.dropna()
    if frame.empty:
        raise ValueError("no complete observations in %s" % path)
    theta = frame["theta"].to_numpy(dtype=float)
    if domain is None:
        if theta.min() >= 0.0 and theta.max() <= 1.0:
            domain = (0.0, 1.0)
        else:
            domain = (float(theta.min()), float(theta.max()))
    functions = []
    ids = []
    for sid, group in frame.groupby("sample_id", sort=True):
        t = _map_to_unit(group["theta"].to_numpy(dtype=float), domain)
        v = group["value"].to_numpy(dtype=float)
        order = np.argsort(t, kind="stable")
        t, v = t[order], v[order]
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("duplicate theta for sample_id %r" % (sid,))
        functions.append(SampledFunction(t, v))
        ids.append(sid)
    return functions, ids, domain


def write_output_functions(path, functions, ids=None, domain=(0.0, 1.0)):
    """Write functions in long format, mapping locations back to ``domain``."""
    functions = list(functions)
    if ids is None:
        ids = list(range(len(functions)))
    rows = []
    for sid, f in zip(ids, functions):
        theta = _map_from_unit(f.locations, domain)
        for t, v in zip(theta, f.values):
            rows.append((sid, t, v))
    pd.DataFrame(rows, columns=["sample_id", "theta", "value"]).to_csv(
        path, index=False)


def read_vector_inputs(path):
    """Read dense vector inputs; returns (list of vectors, sample_ids)."""
    frame = pd.read_csv(path)
    if frame.columns[0] != "sample_id":
        raise ValueError("first column must be sample_id")
    frame = frame.sort_values("sample_id")
    ids = frame["sample_id"].tolist()
    vectors = frame.drop(columns="sample_id").to_numpy(dtype=float)
    if not np.all(np.isfinite(vectors)):
        raise ValueError("vector inputs must be finite (no missing cells)")
    return [row for row in vectors], ids


def write_vector_inputs(path, inputs, ids=None):
    inputs = [np.asarray(x, dtype=float) for x in inputs]
    if ids is None:
        ids = list(range(len(inputs)))
    frame = pd.DataFrame(np.stack(inputs),
                         columns=["x%d" % j for j in range(inputs[0].size)])
    frame.insert(0, "sample_id", ids)
    frame.to_csv(path, index=False)


def read_matrix_inputs(path):
    """Read matrix-valued inputs; returns (list of (m, k) arrays, ids)."""
    frame = pd.read_csv(path)
    if list(frame.columns[:2]) != ["sample_id", "theta"]:
        raise ValueError("first columns must be sample_id, theta")
    frame = frame.dropna()
    matrices = []
    ids = []
    for sid, group in frame.groupby("sample_id", sort=True):
        group = group.sort_values("theta")
        matrices.append(group.drop(columns=["sample_id", "theta"])
                        .to_numpy(dtype=float))
        ids.append(sid)
    return matrices, ids


def write_matrix_inputs(path, inputs, ids=None, thetas=None):
    inputs = [np.asarray(x, dtype=float) for x in inputs]
    if ids is None:
        ids = list(range(len(inputs)))
    rows = []
    for sid, x in zip(ids, inputs):
        t = np.arange(x.shape[0]) if thetas is None else np.asarray(thetas)
        for p in range(x.shape[0]):
            rows.append([sid, t[p]] + list(x[p]))
    cols = ["sample_id", "theta"] + ["c%d" % j for j in range(inputs[0].shape[1])]
    pd.DataFrame(rows, columns=cols).to_csv(path, index=False)


def save_dictionary(stem, dictionary, nodes=None):
    """Serialize a dictionary: atom values CSV + JSON sidecar.

    ``nodes`` defaults to the learning grid for learned dictionaries
    (kept in their params, making the round trip exact) and to 513
    uniform points otherwise.
    """
    if nodes is None:
        nodes = dictionary.params.get("nodes") or np.linspace(0.0, 1.0, 513)
    nodes = np.asarray(nodes, dtype=float)
    values = dictionary(nodes)
    frame = pd.DataFrame(values,
                         columns=["atom_%d" % l for l in range(dictionary.d)])
    frame.insert(0, "theta", nodes)
    frame.to_csv(str(stem) + ".csv", index=False)
    meta = {
        "format": FORMAT_DICTIONARY,
        "family": dictionary.family,
        "d": dictionary.d,
        "params": dictionary.params,
        "scale_index": (None if dictionary.scale_index is None
                        else dictionary.scale_index.tolist()),
    }
    with open(str(stem) + ".json", "w") as fh:
        json.dump(meta, fh, indent=2)


def _dictionary_from_meta(meta, stem=None):
    family = meta["family"]
    params = meta.get("params", {})
    if family == "fourier":
        return make_fourier(params["frequencies"])
    if family == "wavelet":
        return make_wavelet(params["vanishing_moments"], params["levels"])
    if family == "rff":
        return make_rff(params["lengthscale"], params["d"], params["seed"])
    if stem is None:
        raise ValueError("learned dictionary needs its atom CSV")
    frame = pd.read_csv(str(stem) + ".csv")
    nodes = frame["theta"].to_numpy(dtype=float)
    values = frame.drop(columns="theta").to_numpy(dtype=float)
    return from_grid(nodes, values, family=family, params=params,
                     scale_index=meta.get("scale_index"))


def load_dictionary(stem):
    with open(str(stem) + ".json") as fh:
        meta = json.load(fh)
    if meta.get("format") != FORMAT_DICTIONARY:
        raise ValueError("not a dictionary sidecar: %s" % stem)
    return _dictionary_from_meta(meta, stem)


def save_model(stem, model, extras=None):
    """Serialize a fitted model next to ``stem``.

    Writes stem.json (kernel, output structure, lambda, dictionary
    metadata, optional extras such as a mean function or channel
    statistics), stem.alpha.csv, stem.inputs.csv, and, for learned
    dictionaries, stem.dictionary.{csv,json}.
    """
    stem = str(stem)
    dictionary = model.dictionary
    input_kind = "matrix" if model.training_inputs[0].ndim == 2 else "vector"
    meta = {
        "format": FORMAT_MODEL,
        "lambda": model.lam,
        "n": model.n,
        "d": dictionary.d,
        "kernel": {"variant": model.kernel.variant, "sigma": model.kernel.sigma},
        "b": {"variant": model.b.variant, "b": model.b.b},
        "dictionary": {"family": dictionary.family, "params": dictionary.params,
                       "scale_index": (None if dictionary.scale_index is None
                                       else dictionary.scale_index.tolist())},
        "input_kind": input_kind,
        "extras": extras or {},
    }
    with open(stem + ".json", "w") as fh:
        json.dump(meta, fh, indent=2)
    pd.DataFrame(model.alpha).to_csv(stem + ".alpha.csv", index=False)
    if input_kind == "vector":
        write_vector_inputs(stem + ".inputs.csv", model.training_inputs)
    else:
        write_matrix_inputs(stem + ".inputs.csv", model.training_inputs)
    if dictionary.family == "learned":
        save_dictionary(stem + ".dictionary", dictionary)


def load_model(stem):
    """Rebuild a model from its sidecar; returns (model, extras)."""
    stem = str(stem)
    with open(stem + ".json") as fh:
        meta = json.load(fh)
    if meta.get("format") != FORMAT_MODEL:
        raise ValueError("not a model sidecar: %s" % stem)
    dmeta = meta["dictionary"]
    if dmeta["family"] == "learned":
        dictionary = _dictionary_from_meta(
            {"family": "learned", "params": dmeta["params"],
             "scale_index": dmeta.get("scale_index")},
            stem + ".dictionary")
    else:
        dictionary = _dictionary_from_meta(dmeta)
    kernel = ScalarKernel(meta["kernel"]["variant"], meta["kernel"]["sigma"])
    bmeta = meta["b"]
    if bmeta["variant"] == "identity":
        b = build_B("identity", dictionary)
    else:
        b = build_B(bmeta["variant"], dictionary, b=bmeta["b"])
    alpha = pd.read_csv(stem + ".alpha.csv").to_numpy(dtype=float)
    if meta["input_kind"] == "vector":
        inputs, _ = read_vector_inputs(stem + ".inputs.csv")
    else:
        inputs, _ = read_matrix_inputs(stem + ".inputs.csv")
    model = KplModel(alpha, inputs, dictionary, kernel, b, meta["lambda"])
    return model, meta.get("extras", {})
