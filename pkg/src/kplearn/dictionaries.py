"""Dictionaries of output atoms and the associated projection operator.

A dictionary is a finite family phi = (phi_1 .. phi_d) of functions on
[0,1].  The projection operator maps coefficients u to the expansion
sum_l u_l phi_l; its adjoint takes quadrature inner products against the
atoms, and the Gram matrix collects the pairwise atom inner products.
On partially observed data both quantities are replaced by Monte-Carlo
estimates over each sample's own observation locations.
"""

import numpy as np

from . import _accel
from .functions import Quadrature, SampledFunction, inner_product
from .wavelets import folded_atoms


class Dictionary:
    """A family of d atoms on [0,1], evaluable at arbitrary locations.

    Parameters
    ----------
    evaluate : callable
        Maps a (k,) location array to the (k, d) matrix of atom values.
    d : int
        Number of atoms.
    family : str
        One of "fourier", "wavelet", "rff", "learned".
    params : dict
        Family parameters, sufficient to rebuild the dictionary.
    scale_index : ndarray of int, optional
        Per-atom scale used by scale-weighted output structures.
    """

    def __init__(self, evaluate, d, family, params=None, scale_index=None):
        if d < 1:
            raise ValueError("dictionary needs at least one atom")
        self._evaluate = evaluate
        self.d = int(d)
        self.family = family
        self.params = dict(params or {})
        if scale_index is not None:
            scale_index = np.asarray(scale_index, dtype=int)
            if scale_index.shape != (d,):
                raise ValueError("scale_index must have one entry per atom")
            scale_index.flags.writeable = False
        self.scale_index = scale_index

    def __call__(self, locations):
        locations = np.atleast_1d(np.asarray(locations, dtype=float))
        out = self._evaluate(locations)
        if out.shape != (locations.size, self.d):
            raise ValueError("evaluator returned shape %s" % (out.shape,))
        return out

    def __repr__(self):
        return "Dictionary(%s, d=%d)" % (self.family, self.d)


def make_fourier(frequencies):
    """Orthonormal Fourier dictionary: constant plus sqrt(2) cos/sin pairs.

    Atoms are ordered [1, cos(2 pi t), sin(2 pi t), cos(4 pi t), ...],
    giving d = 2 * frequencies + 1.  The per-atom scale index is the
    frequency (0 for the constant).
    """
    F = int(frequencies)
    if F < 1:
        raise ValueError("frequencies must be >= 1")
    freqs = np.arange(1, F + 1)

    def evaluate(t):
        out = np.empty((t.size, 2 * F + 1))
        out[:, 0] = 1.0
        angles = 2.0 * np.pi * t[:, None] * freqs[None, :]
        out[:, 1::2] = np.sqrt(2.0) * np.cos(angles)
        out[:, 2::2] = np.sqrt(2.0) * np.sin(angles)
        return out

    scale = np.zeros(2 * F + 1, dtype=int)
    scale[1::2] = freqs
    scale[2::2] = freqs
    return Dictionary(evaluate, 2 * F + 1, "fourier",
                      {"frequencies": F}, scale)


def make_wavelet(vanishing_moments, levels):
    """Daubechies scaling + wavelet atoms on [0,1], boundary-folded.

    Dilation indices run 0..levels; see :mod:`kplearn.wavelets` for the
    construction.  Atoms are L2-normalized; scale_index is 0 for scaling
    atoms and j + 1 for wavelets at dilation j.
    """
    atoms, scale_index = folded_atoms(vanishing_moments, levels)

    def evaluate(t):
        out = np.empty((t.size, len(atoms)))
        for l, atom in enumerate(atoms):
            out[:, l] = atom(t)
        return out

    return Dictionary(evaluate, len(atoms), "wavelet",
                      {"vanishing_moments": int(vanishing_moments),
                       "levels": int(levels)},
                      scale_index)


def make_rff(lengthscale, d, seed):
    """Random cosine/sine features for a Gaussian kernel on [0,1].

    Draws d/2 frequencies from N(0, 1/lengthscale^2) with the given seed
    and pairs sqrt(2) cos(w t) with sqrt(2) sin(w t) per frequency.
    """
    if lengthscale <= 0:
        raise ValueError("lengthscale must be positive")
    d = int(d)
    if d < 2 or d % 2 != 0:
        raise ValueError("d must be a positive even integer")
    rng = np.random.default_rng(seed)
    freqs = rng.normal(0.0, 1.0 / lengthscale, size=d // 2)

    def evaluate(t):
        angles = t[:, None] * freqs[None, :]
        out = np.empty((t.size, d))
        out[:, 0::2] = np.sqrt(2.0) * np.cos(angles)
        out[:, 1::2] = np.sqrt(2.0) * np.sin(angles)
        return out

    return Dictionary(evaluate, d, "rff",
                      {"lengthscale": float(lengthscale), "d": d,
                       "seed": int(seed)})


def from_grid(nodes, atom_values, family="learned", params=None,
              scale_index=None):
    """Dictionary interpolating precomputed atom values on a grid.

    Evaluation is piecewise linear in each column of ``atom_values``,
    clamped to the edge values outside the grid span.
    """
    nodes = np.asarray(nodes, dtype=float)
    atom_values = np.asarray(atom_values, dtype=float)
    if atom_values.ndim != 2 or atom_values.shape[0] != nodes.size:
        raise ValueError("atom_values must be (len(nodes), d)")

    def evaluate(t):
        out = np.empty((t.size, atom_values.shape[1]))
        for l in range(atom_values.shape[1]):
            out[:, l] = np.interp(t, nodes, atom_values[:, l])
        return out

    return Dictionary(evaluate, atom_values.shape[1], family, params,
                      scale_index)


class GramMatrix:
    """Atom inner-product matrix together with the quadrature that made it."""

    __slots__ = ("matrix", "quadrature")

    def __init__(self, matrix, quadrature):
        matrix = np.asarray(matrix, dtype=float)
        if not np.allclose(matrix, matrix.T, atol=1e-12):
            raise ValueError("gram matrix must be symmetric")
        matrix = 0.5 * (matrix + matrix.T)
        matrix.flags.writeable = False
        self.matrix = matrix
        self.quadrature = quadrature


def gram(dictionary, q):
    """Gram matrix (<phi_l, phi_s>)_{l,s} under quadrature ``q``."""
    atoms = dictionary(q.nodes)
    weighted = atoms * q.weights[:, None]
    g = atoms.T @ weighted
    return GramMatrix(0.5 * (g + g.T), q)


def apply_phi(dictionary, u, targets):
    """Expansion sum_l u_l phi_l evaluated at the target locations."""
    u = np.asarray(u, dtype=float)
    if u.shape != (dictionary.d,):
        raise ValueError("coefficient vector must have length d")
    targets = np.asarray(targets, dtype=float)
    return SampledFunction(targets, dictionary(targets) @ u)


def adjoint_phi(dictionary, g, q):
    """Vector of inner products (<phi_l, g>)_l for g given on q.nodes."""
    if not isinstance(g, SampledFunction):
        raise ValueError("g must be a SampledFunction")
    if len(g) != len(q) or not np.array_equal(g.locations, q.nodes):
        raise ValueError("g must be evaluated exactly on the quadrature nodes")
    atoms = dictionary(q.nodes)
    return atoms.T @ (q.weights * g.values)


def concat_observations(dictionary, sample):
    """Flatten a sample's ragged observations for the accelerated loops.

    Returns
    -------
    values : (M,) all observed values back to back
    offsets : (n+1,) int64 prefix boundaries
    atoms : (M, d) dictionary evaluated at the matching locations
    """
    values = np.concatenate([f.values for f in sample.outputs])
    counts = np.array([len(f) for f in sample.outputs], dtype=np.int64)
    offsets = np.zeros(counts.size + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    locations = np.concatenate([f.locations for f in sample.outputs])
    atoms = np.ascontiguousarray(dictionary(locations))
    return np.ascontiguousarray(values), offsets, atoms


def estimate_nu(dictionary, sample, _concat=None):
    """Monte-Carlo estimates of the atom inner products per sample.

    Column i of the returned (d, n) matrix is
    (1/m_i) sum_p y_ip phi(theta_ip), the plug-in replacement for the
    adjoint applied to the i-th output function.
    """
    values, offsets, atoms = _concat or concat_observations(dictionary, sample)
    return _accel.nu_columns(values, offsets, atoms)


def estimate_gram_per_sample(dictionary, sample, _concat=None):
    """Per-sample estimated Gram blocks (1/m_i) sum_p phi phi^T, (n,d,d)."""
    values, offsets, atoms = _concat or concat_observations(dictionary, sample)
    return _accel.gram_blocks(offsets, atoms)


def riesz_bounds(dictionary, q):
    """Tight empirical frame bounds of the atom family under ``q``.

    Returns (sqrt(min eig G), sqrt(max eig G)); the family is a Riesz
    basis of its span exactly when the lower bound is positive, and both
    bounds are achieved by the corresponding eigenvectors of G.
    """
    g = gram(dictionary, q).matrix
    eigvals = np.linalg.eigvalsh(g)
    return float(np.sqrt(max(eigvals[0], 0.0))), float(np.sqrt(eigvals[-1]))
