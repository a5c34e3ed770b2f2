"""First-order fitting of the projected model under general integral losses.

The training objective, parameterized directly by the representer
coefficient matrix alpha, is

    (1/n) sum_i  L_i(Phi B alpha k_i)  +  lambda tr(K_X alpha^T B alpha)

where L_i integrates a pointwise ground loss against the i-th observed
output, either with quadrature weights (full observation) or as a plain
mean over the sample's own observation locations (partial observation).
Both losses shipped here are convex in the prediction, so the problem is
convex in alpha and a limited-memory quasi-Newton method drives the
gradient norm to tolerance.

The gradient has the closed form

    B ((1/n) C(alpha) + 2 lambda alpha) K_X

with C(alpha) the matrix whose column i projects the pointwise loss
derivatives of sample i back onto the atoms.
"""

import warnings

import numpy as np
from scipy.optimize import minimize

from . import _accel
from .dictionaries import concat_observations
from .errors import NumericError
from .ridge import KplModel, _resolve_kx


class GroundLoss:
    """Pointwise loss l(a, b) between an observed and a predicted value.

    Variants: "square" with l = (a - b)^2, and "logcosh" with
    l = (1/gamma) log cosh(gamma (a - b)), whose derivative in b is
    tanh(gamma (b - a)) and therefore bounded by 1 in magnitude.
    """

    def __init__(self, variant, gamma=None):
        if variant not in ("square", "logcosh"):
            raise ValueError("unknown loss variant %r" % (variant,))
        if variant == "logcosh":
            if gamma is None or gamma <= 0:
                raise ValueError("logcosh needs gamma > 0")
            gamma = float(gamma)
        else:
            gamma = None
        self.variant = variant
        self.gamma = gamma

    @classmethod
    def square(cls):
        return cls("square")

    @classmethod
    def logcosh(cls, gamma):
        return cls("logcosh", gamma)

    # Integer tag used by the accelerated kernels.
    @property
    def kind(self):
        return 0 if self.variant == "square" else 1

    def value(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.variant == "square":
            return (a - b) ** 2
        t = np.abs(self.gamma * (a - b))
        return (t + np.log1p(np.exp(-2.0 * t)) - np.log(2.0)) / self.gamma

    def deriv_second(self, a, b):
        """Derivative of the loss in its second (predicted) argument."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.variant == "square":
            return 2.0 * (b - a)
        return np.tanh(self.gamma * (b - a))

    def __repr__(self):
        if self.variant == "square":
            return "GroundLoss(square)"
        return "GroundLoss(logcosh, gamma=%g)" % self.gamma


def _check_alpha(alpha, d, n):
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (d, n):
        raise ValueError("alpha must be (%d, %d)" % (d, n))
    if not np.all(np.isfinite(alpha)):
        raise ValueError("alpha entries must be finite")
    return alpha


def _penalty(alpha, b_matrix, kx, lam):
    return lam * float(np.sum((b_matrix @ alpha) * (alpha @ kx)))


class FullObjective:
    """Objective/gradient on outputs observed on a shared quadrature grid."""

    def __init__(self, sample, dictionary, kernel, b, quadrature, lam, loss,
                 kx=None):
        if lam <= 0:
            raise ValueError("lambda must be positive")
        nodes = quadrature.nodes
        for f in sample.outputs:
            if len(f) != nodes.size or not np.array_equal(f.locations, nodes):
                raise ValueError("all outputs must be observed on the quadrature nodes")
        self.sample = sample
        self.dictionary = dictionary
        self.b_matrix = b.matrix
        self.lam = float(lam)
        self.loss = loss
        self.weights = quadrature.weights
        self.atoms = dictionary(nodes)
        self.y = np.stack([f.values for f in sample.outputs], axis=1)
        self.kx = _resolve_kx(kernel, sample, kx)
        self.n = len(sample)
        self.d = dictionary.d

    def _predictions(self, alpha):
        return self.atoms @ (self.b_matrix @ alpha @ self.kx)

    def value(self, alpha):
        alpha = _check_alpha(alpha, self.d, self.n)
        pointwise = self.loss.value(self.y, self._predictions(alpha))
        data = float(np.mean(self.weights @ pointwise))
        return data + _penalty(alpha, self.b_matrix, self.kx, self.lam)

    def loss_term_gradient(self, alpha):
        alpha = _check_alpha(alpha, self.d, self.n)
        deriv = self.loss.deriv_second(self.y, self._predictions(alpha))
        cols = self.atoms.T @ (self.weights[:, None] * deriv)
        return self.b_matrix @ (cols / self.n) @ self.kx

    def gradient(self, alpha):
        return self.value_and_gradient(alpha)[1]

    def value_and_gradient(self, alpha):
        alpha = _check_alpha(alpha, self.d, self.n)
        preds = self._predictions(alpha)
        pointwise = self.loss.value(self.y, preds)
        data = float(np.mean(self.weights @ pointwise))
        value = data + _penalty(alpha, self.b_matrix, self.kx, self.lam)
        deriv = self.loss.deriv_second(self.y, preds)
        cols = self.atoms.T @ (self.weights[:, None] * deriv)
        grad = self.b_matrix @ (cols / self.n + 2.0 * self.lam * alpha) @ self.kx
        if not np.all(np.isfinite(grad)):
            raise NumericError("nonfinite gradient (loss=%r, lambda=%g)"
                               % (self.loss, self.lam))
        return value, grad


class PartialObjective:
    """Objective/gradient on ragged per-sample observation locations.

    The data term replaces each quadrature integral with the plain mean
    over the sample's own locations, so the gradient columns are the
    Monte-Carlo projections of the pointwise loss derivatives.
    """

    def __init__(self, sample, dictionary, kernel, b, lam, loss, kx=None):
        if lam <= 0:
            raise ValueError("lambda must be positive")
        self.sample = sample
        self.dictionary = dictionary
        self.b_matrix = b.matrix
        self.lam = float(lam)
        self.loss = loss
        self.values, self.offsets, self.atoms = concat_observations(dictionary, sample)
        self.kx = _resolve_kx(kernel, sample, kx)
        self.n = len(sample)
        self.d = dictionary.d

    def _loss_and_columns(self, alpha):
        w = np.ascontiguousarray(self.b_matrix @ alpha @ self.kx)
        return _accel.loss_and_columns(self.values, self.offsets, self.atoms, w,
                                       self.loss.kind, self.loss.gamma or 0.0)

    def value(self, alpha):
        alpha = _check_alpha(alpha, self.d, self.n)
        losses, _ = self._loss_and_columns(alpha)
        return float(np.mean(losses)) + _penalty(alpha, self.b_matrix, self.kx,
                                                 self.lam)

    def loss_term_gradient(self, alpha):
        alpha = _check_alpha(alpha, self.d, self.n)
        _, cols = self._loss_and_columns(alpha)
        return self.b_matrix @ (cols / self.n) @ self.kx

    def gradient(self, alpha):
        return self.value_and_gradient(alpha)[1]

    def value_and_gradient(self, alpha):
        alpha = _check_alpha(alpha, self.d, self.n)
        losses, cols = self._loss_and_columns(alpha)
        value = float(np.mean(losses)) + _penalty(alpha, self.b_matrix, self.kx,
                                                  self.lam)
        grad = self.b_matrix @ (cols / self.n + 2.0 * self.lam * alpha) @ self.kx
        if not np.all(np.isfinite(grad)):
            raise NumericError("nonfinite gradient (loss=%r, lambda=%g)"
                               % (self.loss, self.lam))
        return value, grad


def fit_iterative(sample, dictionary, kernel, b, lam, loss, *, view="partial",
                  quadrature=None, tol=1e-7, max_iter=2000, history=10,
                  init=None, kx=None):
    """Fit by limited-memory quasi-Newton descent of the integral loss.

    Parameters
    ----------
    view : "partial" or "full"
        Data view the objective is built on.  "full" requires all
        outputs on a shared grid and integrates with ``quadrature``
        (trapezoid on that grid when omitted); "partial" averages over
        each sample's own locations.
    tol : float
        Convergence threshold on the gradient sup-norm.
    init : (d, n) array, optional
        Starting point; zero by default.

    Returns
    -------
    KplModel with fit_info holding convergence status, iteration count,
    and the objective trace over accepted iterates.  A model is returned
    even without convergence, with a warning.
    """
    if view == "full":
        if quadrature is None:
            from .functions import trapezoid_quadrature
            quadrature = trapezoid_quadrature(sample.outputs[0].locations)
        objective = FullObjective(sample, dictionary, kernel, b, quadrature,
                                  lam, loss, kx=kx)
    elif view == "partial":
        objective = PartialObjective(sample, dictionary, kernel, b, lam, loss,
                                     kx=kx)
    else:
        raise ValueError("view must be 'full' or 'partial'")

    d, n = objective.d, objective.n
    if init is None:
        x0 = np.zeros(d * n)
    else:
        x0 = _check_alpha(init, d, n).ravel().copy()

    def fun(x):
        value, grad = objective.value_and_gradient(x.reshape(d, n))
        return value, grad.ravel()

    trace = []

    def record(xk):
        trace.append(objective.value(xk.reshape(d, n)))

    result = minimize(fun, x0, jac=True, method="L-BFGS-B", callback=record,
                      options={"maxiter": max_iter, "maxcor": history,
                               "gtol": tol, "ftol": 1e-15,
                               "maxfun": max(20000, 10 * max_iter)})
    alpha = result.x.reshape(d, n)
    grad_norm = float(np.max(np.abs(result.jac)))
    converged = bool(result.success) or grad_norm <= tol
    if not converged:
        warnings.warn("iterative fit stopped without convergence after %d "
                      "iterations (grad sup-norm %.3g, message: %s)"
                      % (result.nit, grad_norm, result.message),
                      RuntimeWarning)
    fit_info = {
        "converged": converged,
        "iterations": int(result.nit),
        "grad_norm": grad_norm,
        "objective": float(result.fun),
        "message": str(result.message),
        "trace": trace,
        "loss": loss.variant if loss.gamma is None
                else "%s(gamma=%g)" % (loss.variant, loss.gamma),
        "view": view,
    }
    return KplModel(alpha, sample.inputs, dictionary, kernel, b, lam,
                    fit_info=fit_info)
