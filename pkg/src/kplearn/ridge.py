"""Closed-form ridge fitting of the dictionary-projected kernel model.

The coefficient matrix alpha of the representer expansion solves

    M alpha K_X + n lambda alpha = nu,      M = G B,

a discrete Sylvester (Stein) equation coupling the n x n input kernel
matrix with the d x d atom coupling matrix.  Because M = G B with G
positive semidefinite and B symmetric positive definite, the similarity
B^(1/2) G B^(1/2) symmetrizes the d-side and the whole system
diagonalizes; that makes sweeps over many ridge strengths nearly free
once the two eigendecompositions are in hand.

Three fitting routes produce the right-hand side nu:

* ``fit_ridge_full`` — outputs observed on a shared quadrature grid;
  nu columns are quadrature inner products of outputs with atoms.
* ``fit_ridge_plugin`` — partially observed outputs; nu columns are the
  per-sample Monte-Carlo estimates, the atom coupling keeps the exact
  Gram.
* ``fit_ridge_persample_gram`` — also replaces the Gram with per-sample
  estimated blocks, at the price of a dense (dn x dn) solve.
"""

import numpy as np

from .dictionaries import apply_phi, concat_observations, estimate_gram_per_sample, \
    estimate_nu, gram
from .errors import CapacityError
from .functions import as_input_point, uniform_trapezoid
from .kernels import cross_kernel_matrix, kernel_matrix

EIG_CLAMP = 1e-12


class StructuredSystem:
    """The data of one Stein system M alpha K_X + n lambda alpha = nu.

    ``lam`` may be left None when the system is meant for a multi-lambda
    sweep.  ``m`` exposes the coupling product G B.
    """

    __slots__ = ("kx", "gram", "b_matrix", "rhs", "lam")

    def __init__(self, kx, gram, b_matrix, rhs, lam=None):
        kx = np.asarray(kx, dtype=float)
        gram = np.asarray(gram, dtype=float)
        b_matrix = np.asarray(b_matrix, dtype=float)
        rhs = np.asarray(rhs, dtype=float)
        d, n = rhs.shape
        if kx.shape != (n, n) or gram.shape != (d, d) or b_matrix.shape != (d, d):
            raise ValueError("inconsistent system dimensions")
        for a in (kx, gram, b_matrix, rhs):
            if not np.all(np.isfinite(a)):
                raise ValueError("system entries must be finite")
        self.kx = kx
        self.gram = gram
        self.b_matrix = b_matrix
        self.rhs = rhs
        self.lam = lam

    @property
    def m(self):
        return self.gram @ self.b_matrix

    @property
    def n(self):
        return self.kx.shape[0]


class SteinFactorization:
    """Joint eigenbasis of one Stein system, reusable across lambdas.

    Eigendecomposes K_X (clamping eigenvalues below 1e-12 of the largest
    to zero) and S = B^(1/2) G B^(1/2); in the transformed basis the
    solution entries are rhs_bar / (eig_S * eig_K + n lambda).
    """

    def __init__(self, kx, gram_mat, b_matrix):
        eigk, qk = np.linalg.eigh(0.5 * (kx + kx.T))
        top = eigk[-1]
        if top > 0:
            eigk = np.where(eigk < EIG_CLAMP * top, 0.0, eigk)
        else:
            eigk = np.zeros_like(eigk)

        bvals, bvecs = np.linalg.eigh(np.asarray(b_matrix, dtype=float))
        if bvals[0] <= 0:
            raise ValueError("output structure matrix must be positive definite")
        b_half = (bvecs * np.sqrt(bvals)) @ bvecs.T
        b_inv_half = (bvecs / np.sqrt(bvals)) @ bvecs.T

        s = b_half @ gram_mat @ b_half
        eigs, qs = np.linalg.eigh(0.5 * (s + s.T))
        eigs = np.maximum(eigs, 0.0)

        self.eigk = eigk
        self.qk = qk
        self.eigs = eigs
        self.p = b_inv_half @ qs
        self.pinv = qs.T @ b_half

    def solve(self, rhs, n_lambda):
        if n_lambda <= 0:
            raise ValueError("lambda must be positive")
        transformed = self.pinv @ rhs @ self.qk
        denom = np.outer(self.eigs, self.eigk) + n_lambda
        return self.p @ (transformed / denom) @ self.qk.T


def solve_stein(system):
    """Solve one Stein system through the joint eigendecomposition."""
    if system.lam is None:
        raise ValueError("system has no lambda set")
    fact = SteinFactorization(system.kx, system.gram, system.b_matrix)
    return fact.solve(system.rhs, system.n * system.lam)


def solve_multi_lambda(system, lambdas):
    """Solve the same system for every ridge strength in ``lambdas``.

    The eigendecompositions are computed once; each additional lambda
    costs two (d, n) matrix products.
    """
    lambdas = list(lambdas)
    if not lambdas:
        raise ValueError("need at least one lambda")
    fact = SteinFactorization(system.kx, system.gram, system.b_matrix)
    return [fact.solve(system.rhs, system.n * lam) for lam in lambdas]


class KplModel:
    """A fitted model: predicted functions are expansions Phi B alpha k_x."""

    __slots__ = ("alpha", "training_inputs", "dictionary", "kernel", "b",
                 "lam", "fit_info")

    def __init__(self, alpha, training_inputs, dictionary, kernel, b, lam,
                 fit_info=None):
        alpha = np.asarray(alpha, dtype=float)
        training_inputs = tuple(as_input_point(x) for x in training_inputs)
        if alpha.shape != (dictionary.d, len(training_inputs)):
            raise ValueError("alpha must be (d, n)")
        if not np.all(np.isfinite(alpha)):
            raise ValueError("alpha entries must be finite")
        alpha.flags.writeable = False
        self.alpha = alpha
        self.training_inputs = training_inputs
        self.dictionary = dictionary
        self.kernel = kernel
        self.b = b
        self.lam = float(lam)
        self.fit_info = dict(fit_info or {})

    @property
    def n(self):
        return len(self.training_inputs)

    def coefficients(self, inputs):
        """Expansion coefficient vectors B alpha k_x for a list of inputs.

        Returns a (d, len(inputs)) matrix, one column per input.
        """
        kvecs = cross_kernel_matrix(self.kernel, self.training_inputs, inputs)
        return self.b.matrix @ (self.alpha @ kvecs)

    def predict(self, x, targets):
        u = self.coefficients([x])[:, 0]
        return apply_phi(self.dictionary, u, targets)

    def predict_many(self, inputs, targets_list):
        """Predictions for several inputs, each at its own target locations."""
        coef = self.coefficients(inputs)
        return [apply_phi(self.dictionary, coef[:, i], t)
                for i, t in enumerate(targets_list)]


def predict(model, x, targets):
    """Predicted output function of ``model`` at input ``x``."""
    return model.predict(x, targets)


def _resolve_kx(kernel, sample, kx):
    if kx is None:
        return kernel_matrix(kernel, sample.inputs)
    kx = np.asarray(kx, dtype=float)
    if kx.shape != (len(sample), len(sample)):
        raise ValueError("precomputed kernel matrix has the wrong shape")
    return kx


def fit_ridge_full(sample, dictionary, kernel, b, quadrature, lam, *, kx=None):
    """Ridge fit from outputs fully observed on the quadrature grid.

    Every output must be sampled exactly on ``quadrature.nodes``; the
    right-hand side is assembled with quadrature inner products.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    nodes = quadrature.nodes
    for f in sample.outputs:
        if len(f) != nodes.size or not np.array_equal(f.locations, nodes):
            raise ValueError("all outputs must be observed on the quadrature nodes")
    atoms = dictionary(nodes)
    y = np.stack([f.values for f in sample.outputs], axis=1)
    nu = atoms.T @ (quadrature.weights[:, None] * y)
    gram_mat = gram(dictionary, quadrature).matrix
    kx = _resolve_kx(kernel, sample, kx)
    alpha = SteinFactorization(kx, gram_mat, b.matrix).solve(nu, len(sample) * lam)
    return KplModel(alpha, sample.inputs, dictionary, kernel, b, lam)


def fit_ridge_plugin(sample, dictionary, kernel, b, lam, *, quadrature=None,
                     kx=None):
    """Ridge fit from partial observations with Monte-Carlo right-hand side.

    The atom coupling keeps the exact Gram under ``quadrature``
    (1001-node uniform trapezoid when omitted); only nu is estimated
    from each sample's own observation locations.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if quadrature is None:
        quadrature = uniform_trapezoid()
    nu = estimate_nu(dictionary, sample)
    gram_mat = gram(dictionary, quadrature).matrix
    kx = _resolve_kx(kernel, sample, kx)
    alpha = SteinFactorization(kx, gram_mat, b.matrix).solve(nu, len(sample) * lam)
    return KplModel(alpha, sample.inputs, dictionary, kernel, b, lam)


def fit_ridge_persample_gram(sample, dictionary, kernel, b, lam, *, kx=None):
    """Ridge fit with per-sample estimated Gram blocks (dense solve).

    Solves (blkdiag(G_hat_i) (K_X kron B) + n lambda I) vec(alpha) =
    vec(nu_hat) with column-stacked vec.  This is the estimator the
    square-loss iterative solver converges to; the dense system grows as
    (dn)^2, so dn is capped at 5000.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    n = len(sample)
    d = dictionary.d
    if d * n > 5000:
        raise CapacityError("dense per-sample-Gram solve needs d*n <= 5000, got %d"
                            % (d * n))
    flat = concat_observations(dictionary, sample)
    nu = estimate_nu(dictionary, sample, _concat=flat)
    blocks = estimate_gram_per_sample(dictionary, sample, _concat=flat)
    kx = _resolve_kx(kernel, sample, kx)
    big = np.kron(kx, b.matrix)
    for i in range(n):
        big[i * d:(i + 1) * d] = blocks[i] @ big[i * d:(i + 1) * d]
    big[np.diag_indices_from(big)] += n * lam
    vec = np.linalg.solve(big, nu.flatten(order="F"))
    alpha = vec.reshape((d, n), order="F")
    return KplModel(alpha, sample.inputs, dictionary, kernel, b, lam)
