"""Daubechies scaling/wavelet atoms on [0,1] with reflected boundaries.

The compactly supported Daubechies family has no closed form, so atoms
are built in three steps: the low-pass filter is obtained by spectral
factorization of the Daubechies polynomial, the scaling function is
refined on a dyadic grid by the cascade algorithm, and point evaluation
interpolates that cache.  Atoms whose support crosses the boundary of
[0,1] are folded back by symmetric reflection.
"""

from math import comb

import numpy as np
from numpy.polynomial import polynomial as npoly

CASCADE_DEPTH = 12


def daubechies_filter(vanishing_moments):
    """Low-pass filter of the Daubechies family with ``p`` vanishing moments.

    Parameters
    ----------
    vanishing_moments : int
        Number of vanishing moments p, between 1 and 5.  The filter has
        length 2p and its coefficients sum to sqrt(2).

    Returns
    -------
    ndarray of shape (2p,)

    Notes
    -----
    For p >= 2 the filter is the minimal-phase spectral factor of

        |H(w)|^2 = 2 cos(w/2)^(2p) P(sin(w/2)^2),
        P(y) = sum_k C(p-1+k, k) y^k.

    Writing y = -(z-1)^2 / (4z) turns z^(p-1) P(y) into an ordinary
    polynomial whose roots come in (r, 1/r) pairs; keeping the roots
    inside the unit circle and multiplying by (1+z)^p gives h up to a
    constant fixed by the sum condition.
    """
    p = int(vanishing_moments)
    if not 1 <= p <= 5:
        raise ValueError("vanishing_moments must be in 1..5")
    if p == 1:
        return np.array([1.0, 1.0]) / np.sqrt(2.0)

    # Coefficients (low order first) of z^(p-1) P(-(z-1)^2 / (4z)).
    pt = np.zeros(2 * p - 1)
    for k in range(p):
        term = comb(p - 1 + k, k) * (-0.25) ** k * npoly.polypow([-1.0, 1.0], 2 * k)
        shifted = np.concatenate([np.zeros(p - 1 - k), term])
        pt[: shifted.size] += shifted

    roots = npoly.polyroots(pt)
    inside = roots[np.abs(roots) < 1.0]
    factor = npoly.polyfromroots(inside).real
    h = np.convolve(npoly.polypow([1.0, 1.0], p), factor)
    h *= np.sqrt(2.0) / h.sum()
    if abs(h[0]) < abs(h[-1]):
        # orient the spectral factor the conventional way, energy first
        h = h[::-1]
    return h


def quadrature_mirror(h):
    """High-pass filter g_m = (-1)^m h_{L-1-m} paired with ``h``."""
    g = h[::-1].copy()
    g[1::2] *= -1.0
    return g


def _integer_values(h):
    """Scaling-function values at the integers 0..L-1.

    These satisfy phi(k) = sqrt(2) sum_m h_m phi(2k - m); the boundary
    values vanish for p >= 2 and the interior ones form the eigenvector
    of the refinement matrix at eigenvalue 1, normalized to unit sum.
    """
    L = h.size
    if L == 2:
        return np.array([1.0, 0.0])
    interior = np.arange(1, L - 1)
    T = np.zeros((L - 2, L - 2))
    for a, k in enumerate(interior):
        for b, l in enumerate(interior):
            m = 2 * k - l
            if 0 <= m < L:
                T[a, b] = np.sqrt(2.0) * h[m]
    eigvals, eigvecs = np.linalg.eig(T)
    idx = np.argmin(np.abs(eigvals - 1.0))
    v = eigvecs[:, idx].real
    v = v / v.sum()
    out = np.zeros(L)
    out[1:-1] = v
    return out


def _refine(coarse, filt, step):
    """One two-scale refinement: values on a grid twice as fine.

    ``coarse`` holds function values with spacing 2^-(j-1); the result
    has spacing 2^-j and is sqrt(2) * conv(coarse, filt upsampled by
    ``step`` = 2^(j-1)).
    """
    up = np.zeros((filt.size - 1) * step + 1)
    up[::step] = filt
    return np.sqrt(2.0) * np.convolve(coarse, up)


def scaling_and_wavelet_tables(vanishing_moments, depth=CASCADE_DEPTH):
    """Dyadic caches of phi and psi on their common support [0, 2p-1].

    Returns
    -------
    phi, psi : ndarray
        Values at k * 2^-depth for k = 0..(2p-1)*2^depth.
    """
    h = daubechies_filter(vanishing_moments)
    g = quadrature_mirror(h)
    table = _integer_values(h)
    for j in range(1, depth):
        table = _refine(table, h, 2 ** (j - 1))
    phi = _refine(table, h, 2 ** (depth - 1))
    psi = _refine(table, g, 2 ** (depth - 1))
    return phi, psi


class _FoldedAtom:
    """One atom 2^(j/2) f(2^j t - k) folded onto [0,1] by reflection."""

    def __init__(self, table, depth, support, level, shift, scale=1.0):
        self.table = table
        self.grid_step = 2.0 ** (-depth)
        self.support = support
        self.level = level
        self.shift = shift
        self.scale = scale

    def _unfolded(self, t):
        x = 2.0 ** self.level * t - self.shift
        inside = (x >= 0.0) & (x <= self.support)
        out = np.zeros_like(x)
        if np.any(inside):
            idx = x[inside] / self.grid_step
            k = np.floor(idx).astype(np.intp)
            k = np.minimum(k, self.table.size - 2)
            frac = idx - k
            out[inside] = (1.0 - frac) * self.table[k] + frac * self.table[k + 1]
        return out

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        # Support of the dilated atom in the t variable.
        a = self.shift * 2.0 ** (-self.level)
        b = (self.shift + self.support) * 2.0 ** (-self.level)
        out = np.zeros_like(t)
        for r in range(int(np.floor((a - 1.0) / 2.0)), int(np.ceil((b + 1.0) / 2.0)) + 1):
            out += self._unfolded(2.0 * r + t)
            out += self._unfolded(2.0 * r - t)
        return self.scale * 2.0 ** (self.level / 2.0) * out


def folded_atoms(vanishing_moments, levels, depth=CASCADE_DEPTH):
    """All folded scaling and wavelet atoms for a dyadic analysis of [0,1].

    Scaling atoms sit at dilation 0; wavelet atoms run over dilation
    indices j = 0..levels.  At dilation j the integer shifts are those
    whose support [k, k + 2p - 1] / 2^j meets (0, 1).  Each folded atom
    is L2-normalized (midpoint rule on 4096 cells of the unit interval).

    Returns
    -------
    atoms : list of callables
    scale_index : ndarray of int
        0 for scaling atoms, j + 1 for wavelet atoms at dilation j.
    """
    p = int(vanishing_moments)
    if levels < 0:
        raise ValueError("levels must be >= 0")
    phi, psi = scaling_and_wavelet_tables(p, depth)
    support = 2 * p - 1
    midpoints = (np.arange(4096) + 0.5) / 4096.0

    atoms = []
    scale_index = []

    def push(table, level, shift, s_idx):
        atom = _FoldedAtom(table, depth, support, level, shift)
        norm = np.sqrt(np.mean(atom(midpoints) ** 2))
        if norm > 0:
            atom.scale = 1.0 / norm
        atoms.append(atom)
        scale_index.append(s_idx)

    for shift in range(-(support - 1), 1):
        push(phi, 0, shift, 0)
    for j in range(levels + 1):
        for shift in range(-(support - 1), 2 ** j):
            push(psi, j, shift, j + 1)
    return atoms, np.array(scale_index, dtype=int)
