"""Dictionary learning by alternating sparse coding and atom updates.

Given training outputs resampled to a shared quadrature grid, the
problem is

    min_{atoms, beta}  (1/n) sum_i ( ||y_i - Phi beta_i||_q^2
                                     + tau ||beta_i||_1 )
    subject to         ||phi_l||_q^2 <= 1 for every atom,

with the weighted norm realized on the grid.  Sparse coding solves the
coefficient subproblem by accelerated proximal gradient descent; the
dictionary subproblem is block coordinate descent over atoms, each block
being an exact constrained least-squares update.  Working with
sqrt(weight)-scaled values turns the weighted norm into the plain
Euclidean one throughout.
"""

import warnings

import numpy as np

from .dictionaries import from_grid
from .functions import resample


class DlProblem:
    """One dictionary-learning instance on a fixed quadrature grid.

    Parameters
    ----------
    y : (m, n) array
        Training outputs as columns, valued on ``quadrature.nodes``.
    quadrature : Quadrature
    d : int
        Number of atoms to learn.
    tau : float
        L1 trade-off, >= 0.
    """

    def __init__(self, y, quadrature, d, tau, max_rounds=100, tol=1e-6,
                 inner_tol=1e-8, inner_max_iter=5000):
        y = np.asarray(y, dtype=float)
        if y.ndim != 2 or y.shape[0] != len(quadrature):
            raise ValueError("y must be (len(quadrature), n)")
        if y.shape[1] < 1:
            raise ValueError("need at least one training output")
        if not np.all(np.isfinite(y)):
            raise ValueError("training outputs must be finite")
        if d < 1:
            raise ValueError("need at least one atom")
        if tau < 0:
            raise ValueError("tau must be >= 0")
        self.y = y
        self.quadrature = quadrature
        self.d = int(d)
        self.tau = float(tau)
        self.max_rounds = int(max_rounds)
        self.tol = float(tol)
        self.inner_tol = float(inner_tol)
        self.inner_max_iter = int(inner_max_iter)

    @classmethod
    def from_sample(cls, sample, quadrature, d, tau, **kwargs):
        """Build a problem from a sample, resampling outputs to the grid."""
        nodes = quadrature.nodes
        cols = []
        for f in sample.outputs:
            if np.array_equal(f.locations, nodes):
                cols.append(f.values)
            else:
                cols.append(resample(f, nodes).values)
        return cls(np.stack(cols, axis=1), quadrature, d, tau, **kwargs)


class DlResult:
    """Learned dictionary, final codes, and the per-round objective trace."""

    __slots__ = ("dictionary", "beta", "objective_trace", "rounds", "atom_values")

    def __init__(self, dictionary, beta, objective_trace, rounds, atom_values):
        self.dictionary = dictionary
        self.beta = beta
        self.objective_trace = objective_trace
        self.rounds = rounds
        self.atom_values = atom_values


def _soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def _objective(yt, dt, beta, tau):
    resid = yt - dt @ beta
    return float(np.sum(resid * resid) + tau * np.sum(np.abs(beta))) / yt.shape[1]


def sparse_code(y, atoms, tau, q, *, init=None, tol=1e-8, max_iter=5000):
    """Solve the coding subproblem for every column of ``y``.

    Accelerated proximal gradient descent on
    ||y_i - Phi beta_i||_q^2 + tau ||beta_i||_1, all columns at once.
    The best iterate seen is returned, so the result never degrades the
    warm start.  tau = 0 runs the same iteration as plain least squares.

    Parameters
    ----------
    y : (m, n) values on the grid; atoms : (m, d) atom values on the grid.

    Returns
    -------
    beta : (d, n)
    """
    y = np.asarray(y, dtype=float)
    atoms = np.asarray(atoms, dtype=float)
    if tau < 0:
        raise ValueError("tau must be >= 0")
    root_w = np.sqrt(q.weights)[:, None]
    yt = root_w * y
    dt = root_w * atoms
    gram = dt.T @ dt
    lip = 2.0 * float(np.linalg.eigvalsh(gram)[-1])
    d, n = atoms.shape[1], y.shape[1]
    if lip <= 0:
        return np.zeros((d, n))
    step = 1.0 / lip
    dty = dt.T @ yt

    beta = np.zeros((d, n)) if init is None else np.array(init, dtype=float)
    best = beta.copy()
    best_val = _objective(yt, dt, beta, tau)
    momentum = beta.copy()
    t_acc = 1.0
    prev_val = best_val
    for _ in range(max_iter):
        grad = 2.0 * (gram @ momentum - dty)
        nxt = _soft_threshold(momentum - step * grad, step * tau)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        momentum = nxt + ((t_acc - 1.0) / t_next) * (nxt - beta)
        beta = nxt
        t_acc = t_next
        val = _objective(yt, dt, beta, tau)
        if val < best_val:
            best_val = val
            best = beta.copy()
        if abs(prev_val - val) <= tol * max(1.0, abs(prev_val)):
            break
        prev_val = val
    return best


def update_dictionary(y, beta, q, atoms):
    """Block coordinate update of every atom at fixed codes.

    Each used atom gets its exact least-squares update followed by
    projection onto the unit ball of the weighted norm (the constrained
    block minimizer, since the block objective is isotropic); atoms with
    all-zero code rows are left unchanged.

    Returns the updated (m, d) atom values on the grid.
    """
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    root_w = np.sqrt(q.weights)[:, None]
    yt = root_w * y
    dt = root_w * np.asarray(atoms, dtype=float)
    resid = yt - dt @ beta
    for l in range(dt.shape[1]):
        usage = float(beta[l] @ beta[l])
        if usage == 0.0:
            continue
        with_l = resid + np.outer(dt[:, l], beta[l])
        new_col = with_l @ beta[l] / usage
        norm = float(np.linalg.norm(new_col))
        if norm > 1.0:
            new_col /= norm
        resid = with_l - np.outer(new_col, beta[l])
        dt[:, l] = new_col
    return dt / root_w


def learn_dictionary(problem, seed):
    """Alternate coding and atom updates from a seeded data-column start.

    Initial atoms are d randomly chosen training columns, normalized in
    the weighted norm.  Rounds stop when the relative objective decrease
    falls under ``problem.tol`` or after ``problem.max_rounds``.  The
    recorded trace starts at the zero-code objective and is
    non-increasing.
    """
    y = problem.y
    q = problem.quadrature
    n = y.shape[1]
    d = problem.d
    rng = np.random.default_rng(seed)
    if d > n:
        warnings.warn("more atoms (%d) than training outputs (%d); "
                      "initial atoms drawn with replacement" % (d, n))
        picks = rng.choice(n, size=d, replace=True)
    else:
        picks = rng.choice(n, size=d, replace=False)

    root_w = np.sqrt(q.weights)[:, None]
    yt = root_w * y
    atoms = y[:, picks].copy()
    for l in range(d):
        norm = float(np.linalg.norm(root_w[:, 0] * atoms[:, l]))
        if norm > 0:
            atoms[:, l] /= norm

    beta = np.zeros((d, n))
    trace = [_objective(yt, root_w * atoms, beta, problem.tau)]
    rounds = 0
    for rounds in range(1, problem.max_rounds + 1):
        beta = sparse_code(y, atoms, problem.tau, q, init=beta,
                           tol=problem.inner_tol,
                           max_iter=problem.inner_max_iter)
        atoms = update_dictionary(y, beta, q, atoms)
        trace.append(_objective(yt, root_w * atoms, beta, problem.tau))
        if trace[-2] - trace[-1] <= problem.tol * max(abs(trace[-2]), 1e-300):
            break

    dictionary = from_grid(q.nodes, atoms, family="learned",
                           params={"d": d, "tau": problem.tau,
                                   "nodes": [float(t) for t in q.nodes]})
    return DlResult(dictionary, beta, np.array(trace), rounds, atoms)
