"""Functional-output regression through projections onto a dictionary.

The model predicts an output function as an expansion over a fixed (or
learned) dictionary of atoms, with expansion coefficients produced by a
vector-valued kernel ridge model over the inputs.  Fitting is either a
structured closed-form solve, a plug-in variant for partially observed
outputs, or first-order minimization of an integral loss; a dictionary
can itself be learned from the training outputs.
"""

from ._accel import BACKEND
from .baselines import KeModel, fit_ke, ke_predict, semi_metric
from .datasets import CorruptionSpec, ToyConfig, ToyGenerator, \
    bspline4, bspline4_centered, center_outputs, corrupt, generate_toy, \
    kfold_cv, standardize_channels, train_test_split
from .dictionaries import Dictionary, GramMatrix, adjoint_phi, apply_phi, \
    concat_observations, estimate_gram_per_sample, estimate_nu, from_grid, \
    gram, make_fourier, make_rff, make_wavelet, riesz_bounds
from .dictlearn import DlProblem, DlResult, learn_dictionary, sparse_code, \
    update_dictionary
from .errors import CapacityError, NumericError
from .functions import PartialSample, Quadrature, SampledFunction, \
    as_input_point, inner_product, mean_quadrature, mse, resample, snr, \
    trapezoid_quadrature, uniform_trapezoid
from .iterative import FullObjective, GroundLoss, PartialObjective, \
    fit_iterative
from .kernels import OutputStructureMatrix, ScalarKernel, build_B, \
    cross_kernel_matrix, eval_kernel, kernel_matrix
from .ridge import KplModel, SteinFactorization, StructuredSystem, \
    fit_ridge_full, fit_ridge_persample_gram, fit_ridge_plugin, predict, \
    solve_multi_lambda, solve_stein

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CapacityError",
    "CorruptionSpec",
    "Dictionary",
    "DlProblem",
    "DlResult",
    "FullObjective",
    "GramMatrix",
    "GroundLoss",
    "KeModel",
    "KplModel",
    "NumericError",
    "OutputStructureMatrix",
    "PartialObjective",
    "PartialSample",
    "Quadrature",
    "SampledFunction",
    "ScalarKernel",
    "SteinFactorization",
    "StructuredSystem",
    "ToyConfig",
    "ToyGenerator",
    "adjoint_phi",
    "apply_phi",
    "as_input_point",
    "bspline4",
    "bspline4_centered",
    "build_B",
    "center_outputs",
    "concat_observations",
    "corrupt",
    "cross_kernel_matrix",
    "estimate_gram_per_sample",
    "estimate_nu",
    "eval_kernel",
    "fit_iterative",
    "fit_ke",
    "fit_ridge_full",
    "fit_ridge_persample_gram",
    "fit_ridge_plugin",
    "from_grid",
    "generate_toy",
    "gram",
    "inner_product",
    "ke_predict",
    "kernel_matrix",
    "kfold_cv",
    "learn_dictionary",
    "make_fourier",
    "make_rff",
    "make_wavelet",
    "mean_quadrature",
    "mse",
    "predict",
    "resample",
    "riesz_bounds",
    "semi_metric",
    "snr",
    "solve_multi_lambda",
    "solve_stein",
    "sparse_code",
    "standardize_channels",
    "trapezoid_quadrature",
    "train_test_split",
    "uniform_trapezoid",
    "update_dictionary",
]
