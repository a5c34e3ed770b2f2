import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kplearn.dictionaries import make_fourier
from kplearn.kernels import (ScalarKernel, build_B, cross_kernel_matrix,
                             eval_kernel, kernel_matrix)


# ---------------------------------------------------------------------------
# scalar kernels


def test_unit_diagonal_all_variants():
    x = np.array([0.3, -1.2])
    for variant in ("gaussian", "laplace"):
        k = ScalarKernel(variant, 0.7)
        assert eval_kernel(k, x, x) == pytest.approx(1.0)
    k = ScalarKernel("integral_gaussian", 0.7)
    m = np.array([[0.1, 0.2], [0.3, 0.4]])
    assert eval_kernel(k, m, m) == pytest.approx(1.0)


def test_gaussian_unit_distance():
    k = ScalarKernel("gaussian", 1.0)
    assert eval_kernel(k, np.array([0.0]), np.array([1.0])) == pytest.approx(
        np.exp(-1.0))


def test_laplace_value():
    k = ScalarKernel("laplace", 2.0)
    assert eval_kernel(k, np.array([0.0, 0.0]), np.array([3.0, 4.0])) == \
        pytest.approx(np.exp(-2.5))


def test_integral_gaussian_constant_rows():
    # rows constant at c and c+delta: mean over locations collapses to a
    # single squared difference
    delta, sigma = 0.4, 0.9
    x0 = np.full((5, 1), 1.0)
    x1 = np.full((5, 1), 1.0 + delta)
    k = ScalarKernel("integral_gaussian", sigma)
    assert eval_kernel(k, x0, x1) == pytest.approx(
        np.exp(-delta ** 2 / sigma ** 2))


def test_integral_gaussian_mean_oracle():
    rng = np.random.default_rng(5)
    x0 = rng.standard_normal((7, 3))
    x1 = rng.standard_normal((7, 3))
    sigma = 1.3
    expect = np.mean([np.exp(-np.sum((x0[i] - x1[i]) ** 2) / sigma ** 2)
                      for i in range(7)])
    k = ScalarKernel("integral_gaussian", sigma)
    assert eval_kernel(k, x0, x1) == pytest.approx(expect, rel=1e-12)


def test_kernel_matrix_single_input():
    k = ScalarKernel("gaussian", 1.0)
    np.testing.assert_array_equal(kernel_matrix(k, [np.array([2.0])]),
                                  [[1.0]])


def test_kernel_matrix_matches_pairwise():
    rng = np.random.default_rng(11)
    inputs = [rng.standard_normal(4) for _ in range(6)]
    for variant in ("gaussian", "laplace"):
        k = ScalarKernel(variant, 1.7)
        full = kernel_matrix(k, inputs)
        for i in range(6):
            for j in range(6):
                assert full[i, j] == pytest.approx(
                    eval_kernel(k, inputs[i], inputs[j]), abs=1e-12)


def test_kernel_matrix_duplicates_rank_deficient():
    k = ScalarKernel("gaussian", 1.0)
    x = np.array([0.5, -0.5])
    inputs = [x, x, np.array([3.0, 1.0])]
    m = kernel_matrix(k, inputs)
    assert np.linalg.matrix_rank(m) < 3


def test_tiny_bandwidth_near_identity():
    rng = np.random.default_rng(2)
    inputs = [rng.standard_normal(3) for _ in range(5)]
    m = kernel_matrix(ScalarKernel("gaussian", 1e-3), inputs)
    off = m - np.eye(5)
    assert np.abs(off).max() < 1e-12


def test_kernel_matrix_symmetric_psd():
    rng = np.random.default_rng(7)
    inputs = [rng.standard_normal(2) for _ in range(8)]
    m = kernel_matrix(ScalarKernel("gaussian", 1.1), inputs)
    np.testing.assert_array_equal(m, m.T)
    assert np.linalg.eigvalsh(m)[0] > -1e-10


def test_cross_kernel_matches_eval():
    rng = np.random.default_rng(13)
    a = [rng.standard_normal(3) for _ in range(4)]
    b = [rng.standard_normal(3) for _ in range(5)]
    k = ScalarKernel("laplace", 0.8)
    cross = cross_kernel_matrix(k, a, b)
    assert cross.shape == (4, 5)
    for i in range(4):
        for j in range(5):
            assert cross[i, j] == pytest.approx(eval_kernel(k, a[i], b[j]),
                                                abs=1e-12)


def test_cross_kernel_integral_variant():
    rng = np.random.default_rng(17)
    a = [rng.standard_normal((6, 2)) for _ in range(3)]
    b = [rng.standard_normal((6, 2)) for _ in range(2)]
    k = ScalarKernel("integral_gaussian", 1.4)
    cross = cross_kernel_matrix(k, a, b)
    for i in range(3):
        for j in range(2):
            assert cross[i, j] == pytest.approx(eval_kernel(k, a[i], b[j]),
                                                rel=1e-12)


@given(st.integers(0, 500), st.floats(0.2, 5.0))
@settings(max_examples=25)
def test_gaussian_bounded_and_symmetric(seed, sigma):
    rng = np.random.default_rng(seed)
    x0, x1 = rng.standard_normal(3), rng.standard_normal(3)
    k = ScalarKernel("gaussian", sigma)
    v = eval_kernel(k, x0, x1)
    assert 0.0 < v <= 1.0
    assert v == pytest.approx(eval_kernel(k, x1, x0))


def test_bad_kernel_args():
    with pytest.raises(ValueError):
        ScalarKernel("cubic", 1.0)
    with pytest.raises(ValueError):
        ScalarKernel("gaussian", 0.0)
    with pytest.raises(ValueError):
        eval_kernel(ScalarKernel("gaussian", 1.0), np.zeros(2), np.zeros(3))
    with pytest.raises(ValueError):
        kernel_matrix(ScalarKernel("gaussian", 1.0), [])
    with pytest.raises(ValueError):
        kernel_matrix(ScalarKernel("gaussian", 1.0),
                      [np.zeros(2), np.zeros(3)])
    with pytest.raises(ValueError):
        eval_kernel(ScalarKernel("integral_gaussian", 1.0),
                    np.zeros(3), np.zeros(3))


# ---------------------------------------------------------------------------
# output structure matrix


def test_b_identity():
    dic = make_fourier(2)
    B = build_B("identity", dic)
    np.testing.assert_array_equal(B.matrix, np.eye(5))
    assert B.d == 5


def test_b_diagonal_scale_unit_base():
    dic = make_fourier(2)
    B = build_B("diagonal_scale", dic, b=1.0)
    np.testing.assert_array_equal(B.matrix, np.eye(5))


def test_b_diagonal_scale_base_two():
    dic = make_fourier(1)
    # scale indices (0, 1, 1) plus a synthetic finer atom is not needed;
    # check 2^(-j) on the real layout
    B = build_B("diagonal_scale", dic, b=2.0)
    np.testing.assert_allclose(np.diag(B.matrix), [1.0, 0.5, 0.5])
    assert B.b == 2.0


def test_b_diagonal_scale_four_indices():
    class Fake:
        d = 4
        scale_index = np.array([0, 1, 1, 2])

    B = build_B("diagonal_scale", Fake(), b=2.0)
    np.testing.assert_allclose(np.diag(B.matrix), [1.0, 0.5, 0.5, 0.25])
    np.testing.assert_array_equal(B.matrix - np.diag(np.diag(B.matrix)), 0.0)


def test_b_rejects_bad_requests():
    class NoScale:
        d = 3
        scale_index = None

    with pytest.raises(ValueError):
        build_B("diagonal_scale", NoScale())
    with pytest.raises(ValueError):
        build_B("diagonal_scale", make_fourier(1), b=0.5)
    with pytest.raises(ValueError):
        build_B("toeplitz", make_fourier(1))


def test_b_matrix_read_only():
    B = build_B("identity", make_fourier(1))
    with pytest.raises(ValueError):
        B.matrix[0, 0] = 5.0
