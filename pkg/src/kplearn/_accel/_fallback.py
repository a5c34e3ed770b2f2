"""Pure numpy implementations of the ragged-data hot loops.

Same contracts as the compiled module ``_fast``; used when the extension
is unavailable or disabled.  Ragged per-sample data arrives concatenated:
``values`` holds all observed values back to back, ``offsets`` is the
int64 prefix array of length n+1 with sample i occupying
``values[offsets[i]:offsets[i+1]]``, and ``atoms`` holds the dictionary
evaluated at the matching locations, one row per observation.
"""

import numpy as np

BACKEND = "numpy"


def nu_columns(values, offsets, atoms):
    """Per-sample mean projections of observed values on the atoms.

    Returns the (d, n) matrix whose column i is
    (1/m_i) sum_p atoms[p] * values[p] over sample i's observations.
    """
    n = offsets.size - 1
    d = atoms.shape[1]
    out = np.empty((d, n))
    for i in range(n):
        lo, hi = offsets[i], offsets[i + 1]
        out[:, i] = atoms[lo:hi].T @ (values[lo:hi] / (hi - lo))
    return out


def gram_blocks(offsets, atoms):
    """Per-sample mean-weighted Gram blocks, shape (n, d, d)."""
    n = offsets.size - 1
    d = atoms.shape[1]
    out = np.empty((n, d, d))
    for i in range(n):
        lo, hi = offsets[i], offsets[i + 1]
        block = atoms[lo:hi]
        out[i] = block.T @ block / (hi - lo)
    return out


def loss_and_columns(values, offsets, atoms, w, kind, gamma):
    """Per-sample mean losses and mean loss-derivative projections.

    Parameters
    ----------
    values, offsets, atoms : concatenated ragged data (see module doc).
    w : (d, n) array
        Column i is the coefficient vector whose expansion is compared
        to sample i's observations.
    kind : int
        0 = square loss (y - p)^2, 1 = logcosh loss
        (1/gamma) log cosh(gamma (y - p)).
    gamma : float
        Sharpness of the logcosh loss; ignored for the square loss.

    Returns
    -------
    losses : (n,) array of per-sample mean losses.
    cols : (d, n) array; column i is
        (1/m_i) sum_p dloss/dpred(y_p, pred_p) * atoms[p].
    """
    n = offsets.size - 1
    d = atoms.shape[1]
    losses = np.empty(n)
    cols = np.empty((d, n))
    for i in range(n):
        lo, hi = offsets[i], offsets[i + 1]
        block = atoms[lo:hi]
        pred = block @ w[:, i]
        resid = values[lo:hi] - pred
        if kind == 0:
            losses[i] = np.mean(resid * resid)
            deriv = -2.0 * resid
        else:
            t = np.abs(gamma * resid)
            losses[i] = np.mean(t + np.log1p(np.exp(-2.0 * t)) - np.log(2.0)) / gamma
            deriv = np.tanh(-gamma * resid)
        cols[:, i] = block.T @ (deriv / (hi - lo))
    return losses, cols


def integral_gaussian_gram(x, sigma):
    """Kernel matrix of the integral Gaussian kernel on stacked inputs.

    ``x`` has shape (n, m, c): n matrix-valued inputs on a shared grid of
    m locations with c channels.  Entry (i, j) is
    (1/m) sum_p exp(-||x_i[p] - x_j[p]||^2 / sigma^2).
    """
    n, m, _ = x.shape
    inv = 1.0 / (sigma * sigma)
    out = np.ones((n, n))
    for i in range(n):
        diff = x[i + 1:] - x[i]
        sq = np.einsum("jpc,jpc->jp", diff, diff)
        row = np.exp(-sq * inv).mean(axis=1)
        out[i, i + 1:] = row
        out[i + 1:, i] = row
    return out


def integral_gaussian_cross(x0, x1, sigma):
    """Cross kernel matrix, shape (n0, n1), same kernel as above."""
    n0 = x0.shape[0]
    n1 = x1.shape[0]
    inv = 1.0 / (sigma * sigma)
    out = np.empty((n0, n1))
    for i in range(n0):
        diff = x1 - x0[i]
        sq = np.einsum("jpc,jpc->jp", diff, diff)
        out[i] = np.exp(-sq * inv).mean(axis=1)
    return out
