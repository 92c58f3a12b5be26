import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from conftest import crandn, with_singular_values
from lowrank_newton.eig import eig_equation_operator, shift_matrix
from lowrank_newton.linalg_core import subspace_distance
from lowrank_newton.linear_solve import (NoSolution, NonlinearMapping, TrivialSolution,
                                         error_bound_report, general_solve, operator_matrix,
                                         operator_solve)
from lowrank_newton.mapping import Layout, MappingHandle, PolySpace, Vector, coordinate_mapping
from lowrank_newton.poly import parse_poly


def test_diagonal():
    sol = general_solve(np.diag([1.0, 0.0]), [1.0, 0.0], rank=1, x0=[0.0, 0.0])
    assert_allclose(sol.particular, [1, 0])
    assert sol.kernel_dim == 1
    assert_allclose(np.abs(sol.kernel_basis[:, 0]), [0, 1])


def test_homogeneous(rng):
    A = with_singular_values(rng, 4, 6, [2.0, 1.0, 0.5])
    sol = general_solve(A, np.zeros(4))
    assert_allclose(sol.particular, 0)
    assert sol.kernel_dim == 3
    assert np.linalg.norm(A @ sol.kernel_basis) <= 1e-13


def random_consistent(rng, m, n, r):
    A = crandn(rng, m, r) @ crandn(rng, r, n)
    return A, A @ crandn(rng, n)


def test_random_rank3_vs_pinv(rng):
    A, b = random_consistent(rng, 6, 5, 3)
    x0 = crandn(rng, 5)
    sol = general_solve(A, b, rank=3, x0=x0)
    Ap = np.linalg.pinv(A, rcond=1e-10)
    ref = Ap @ b + x0 - Ap @ (A @ x0)
    assert np.linalg.norm(sol.particular - ref) <= 1e-10 * np.linalg.norm(ref)
    assert sol.residual <= 1e-10 * np.linalg.norm(b)
    K = sol.kernel_basis
    assert_allclose(K.conj().T @ K, np.eye(2), atol=1e-13)
    # nearest solution to x0: the correction is orthogonal to the kernel
    assert np.linalg.norm(K.conj().T @ (sol.particular - x0)) <= 1e-10 * np.linalg.norm(x0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_one_step_exactness(seed):
    rng = np.random.default_rng(seed)
    m, n = (int(v) for v in rng.integers(2, 8, size=2))
    r = int(rng.integers(1, min(m, n) + 1))
    A, b = random_consistent(rng, m, n, r)
    x0 = crandn(rng, n)
    sol = general_solve(A, b, rank=r, x0=x0)
    Ap = np.linalg.pinv(A, rcond=1e-9)
    ref = Ap @ b + x0 - Ap @ (A @ x0)
    assert np.linalg.norm(sol.particular - ref) <= 1e-10 * max(1.0, np.linalg.norm(ref))


def test_theta_and_rank_priority(rng):
    A = with_singular_values(rng, 5, 5, [1.0, 0.5, 1e-3, 1e-9])
    b = crandn(rng, 5)
    assert general_solve(A, b, theta=1e-6).rank_used == 3
    assert general_solve(A, b, theta=1e-2).rank_used == 2
    assert general_solve(A, b, rank=1, theta=1e-6).rank_used == 1
    assert general_solve(A, b).rank_used == 4


def test_projected_rhs(rng):
    A = with_singular_values(rng, 5, 3, [2.0, 1.0])
    b = crandn(rng, 5)
    sol = general_solve(A, b, rank=2)
    U = np.linalg.svd(A)[0][:, :2]
    assert sol.residual == pytest.approx(np.linalg.norm(b - U @ (U.conj().T @ b)), rel=1e-10)


def test_rank_zero():
    with pytest.raises(TrivialSolution):
        general_solve(np.zeros((2, 2)), np.zeros(2), theta=1e-8)
    with pytest.raises(NoSolution):
        general_solve(np.zeros((2, 2)), [1.0, 0.0], theta=1e-8)
    with pytest.raises(ValueError):
        general_solve(np.eye(2), [1.0])


def test_operator_identity(rng):
    L = coordinate_mapping(lambda x: x, 3, 3)
    b = crandn(rng, 3)
    sol = operator_solve(L, b)
    assert_allclose(sol.particular, b)
    assert sol.kernel_dim == 0


def test_operator_polynomial_division():
    x = ("x",)
    P1 = PolySpace([(1,), (0,)], x)
    P2 = PolySpace([(2,), (1,), (0,)], x)
    d = parse_poly("x - 1", x)
    L = MappingHandle(Layout(P1), Layout(P2), eval=lambda p: d * p)
    assert_allclose(operator_matrix(L), [[1, 0], [-1, 1], [0, -1]])
    sol = operator_solve(L, parse_poly("(x-1)*(x+2)", x))
    assert (sol.particular - parse_poly("x+2", x)).norm() <= 1e-14


def test_operator_eig_kernel(example3):
    L = eig_equation_operator(example3, 1.98, shift_matrix(2))
    sol = operator_solve(L, np.zeros((8, 2)), theta=3e-2)
    assert sol.kernel_dim == 4
    for K in sol.kernel:
        assert K.shape == (8, 2)


def test_operator_nonlinear():
    with pytest.raises(NonlinearMapping):
        operator_solve(coordinate_mapping(lambda x: x ** 2, 2, 2), np.ones(2))
    with pytest.raises(NonlinearMapping):
        operator_solve(coordinate_mapping(lambda x: x + 1, 2, 2), np.ones(2))


def test_bounds_trivial(rng):
    A, b = random_consistent(rng, 5, 4, 2)
    sol = general_solve(A, b, rank=2)
    rep = error_bound_report(A, b, sol)
    assert rep.valid
    assert rep.solution_bound <= 1e-13 * rep.norm_A * rep.norm_pinv
    assert rep.affine_bound == 0
    bad = error_bound_report(np.diag([1.0, 0.0]), [1.0, 0.0],
                             general_solve(np.diag([1.0, 0.0]), [1.0, 0.0], rank=1), dA=0.6)
    assert not bad.valid and bad.message == "perturbation too large"


def test_bounds_hold_under_noise(rng):
    A, b = random_consistent(rng, 6, 5, 3)
    eps = 1e-8
    E = crandn(rng, 6, 5)
    E *= eps / np.linalg.norm(E, 2)
    e = crandn(rng, 6)
    e *= eps / np.linalg.norm(e)
    x0 = crandn(rng, 5)
    exact = general_solve(A, b, rank=3, x0=x0)
    noisy = general_solve(A + E, b + e, rank=3, x0=x0)
    rep = error_bound_report(A + E, b + e, noisy, dA=eps, db=eps)
    assert rep.valid
    err = np.linalg.norm(noisy.particular - exact.particular)
    assert err <= rep.affine_bound * max(1.0, np.linalg.norm(x0))
    dist = subspace_distance(noisy.kernel_basis, exact.kernel_basis)
    assert dist <= rep.affine_bound


def test_linear_perturbation_scaling(rng):
    A, b = random_consistent(rng, 6, 5, 3)
    E, e = crandn(rng, 6, 5), crandn(rng, 6)
    x0 = crandn(rng, 5)
    ref = general_solve(A, b, rank=3, x0=x0).particular
    ratios = []
    for eps in (1e-4, 1e-6, 1e-8):
        x = general_solve(A + eps * E, b + eps * e, rank=3, x0=x0).particular
        ratios.append(np.linalg.norm(x - ref) / eps)
    assert max(ratios) / min(ratios) <= 10
