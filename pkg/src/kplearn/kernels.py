"""Scalar input kernels and the output-structure matrix of the separable model.

The operator-valued kernel used throughout is separable, K = k B: a
scalar kernel on the inputs times a fixed symmetric positive-definite
d x d matrix acting on expansion coefficients.  Vector inputs use the
Gaussian or Laplacian kernel; matrix-valued inputs (per-location channel
values on a shared grid) use the integral Gaussian kernel, a mean of
pointwise Gaussian similarities over the shared locations.
"""

import numpy as np
from scipy.spatial.distance import cdist

from . import _accel


class ScalarKernel:
    """A positive-definite scalar kernel with k(x, x) = 1.

    Parameters
    ----------
    variant : str
        "gaussian", "laplace", or "integral_gaussian".
    sigma : float
        Positive bandwidth.
    """

    VARIANTS = ("gaussian", "laplace", "integral_gaussian")

    def __init__(self, variant, sigma):
        if variant not in self.VARIANTS:
            raise ValueError("unknown kernel variant %r" % (variant,))
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        self.variant = variant
        self.sigma = float(sigma)

    def __repr__(self):
        return "ScalarKernel(%s, sigma=%g)" % (self.variant, self.sigma)


def eval_kernel(kernel, x0, x1):
    """Evaluate the kernel on one pair of input points."""
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    if x0.shape != x1.shape:
        raise ValueError("inputs must have the same shape")
    if kernel.variant == "integral_gaussian":
        if x0.ndim != 2:
            raise ValueError("integral kernel requires matrix inputs")
        sq = np.sum((x0 - x1) ** 2, axis=1)
        return float(np.mean(np.exp(-sq / kernel.sigma ** 2)))
    diff = (x0 - x1).ravel()
    if kernel.variant == "gaussian":
        return float(np.exp(-np.dot(diff, diff) / kernel.sigma ** 2))
    return float(np.exp(-np.linalg.norm(diff) / kernel.sigma))


def _stack(inputs):
    arr = np.ascontiguousarray(np.stack([np.asarray(x, dtype=float) for x in inputs]))
    return arr


def kernel_matrix(kernel, inputs):
    """Symmetric kernel matrix (k(x_i, x_j)) over a list of inputs."""
    inputs = list(inputs)
    if not inputs:
        raise ValueError("need at least one input")
    shapes = {np.asarray(x).shape for x in inputs}
    if len(shapes) != 1:
        raise ValueError("inputs must have homogeneous shapes")
    x = _stack(inputs)
    if kernel.variant == "integral_gaussian":
        if x.ndim != 3:
            raise ValueError("integral kernel requires matrix inputs")
        out = _accel.integral_gaussian_gram(x, kernel.sigma)
    else:
        flat = x.reshape(len(inputs), -1)
        if kernel.variant == "gaussian":
            out = np.exp(-cdist(flat, flat, "sqeuclidean") / kernel.sigma ** 2)
        else:
            out = np.exp(-cdist(flat, flat, "euclidean") / kernel.sigma)
        out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return out


def cross_kernel_matrix(kernel, inputs0, inputs1):
    """Rectangular kernel matrix (k(x0_i, x1_j)), shape (n0, n1)."""
    inputs0, inputs1 = list(inputs0), list(inputs1)
    if not inputs0 or not inputs1:
        raise ValueError("need at least one input on each side")
    x0 = _stack(inputs0)
    x1 = _stack(inputs1)
    if x0.shape[1:] != x1.shape[1:]:
        raise ValueError("inputs must have homogeneous shapes")
    if kernel.variant == "integral_gaussian":
        return _accel.integral_gaussian_cross(x0, x1, kernel.sigma)
    f0 = x0.reshape(len(inputs0), -1)
    f1 = x1.reshape(len(inputs1), -1)
    if kernel.variant == "gaussian":
        return np.exp(-cdist(f0, f1, "sqeuclidean") / kernel.sigma ** 2)
    return np.exp(-cdist(f0, f1, "euclidean") / kernel.sigma)


class OutputStructureMatrix:
    """The symmetric positive-definite B of the separable kernel K = kB."""

    __slots__ = ("variant", "matrix", "b")

    def __init__(self, variant, matrix, b=None):
        matrix = np.asarray(matrix, dtype=float)
        matrix.flags.writeable = False
        self.variant = variant
        self.matrix = matrix
        self.b = b

    @property
    def d(self):
        return self.matrix.shape[0]


def build_B(variant, dictionary, b=None):
    """Build the output structure matrix for a dictionary.

    "identity" gives I_d.  "diagonal_scale" gives diag(b^(-j_l)) over the
    dictionary's per-atom scale indices, penalizing finer scales more;
    it requires b >= 1 and a dictionary carrying scale_index.
    """
    if variant == "identity":
        return OutputStructureMatrix("identity", np.eye(dictionary.d))
    if variant == "diagonal_scale":
        if dictionary.scale_index is None:
            raise ValueError("diagonal_scale requires a dictionary with scale_index")
        if b is None or b < 1:
            raise ValueError("diagonal_scale requires b >= 1")
        diag = float(b) ** (-dictionary.scale_index.astype(float))
        return OutputStructureMatrix("diagonal_scale", np.diag(diag), float(b))
    raise ValueError("unknown output structure variant %r" % (variant,))
