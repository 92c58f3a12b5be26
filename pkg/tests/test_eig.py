import time

import numpy as np
import pytest

from conftest import crandn
from lowrank_newton.eig import (MultiplicitySupport, SupportMismatch, check_shift_matrix,
                                defective_eig, defective_eig_refine, eig_initialize, eig_mapping,
                                shift_matrix)
from lowrank_newton.linear_solve import operator_solve
from lowrank_newton.eig import eig_equation_operator
from lowrank_newton.mapping import fd_jacobian_check
from lowrank_newton.newton import CONVERGED_ZERO, quadratic_ratios


def jordan_harness(seed=7):
    """Similarity transform of diag(J3(1), 2, 3)."""
    rng = np.random.default_rng(seed)
    J = np.zeros((5, 5))
    J[:3, :3] = np.eye(3) + np.eye(3, k=1)
    J[3, 3], J[4, 4] = 2.0, 3.0
    T = rng.standard_normal((5, 5))
    return T @ J @ np.linalg.inv(T), rng


def test_support():
    s = MultiplicitySupport(2, 2)
    assert s.rank(8) == 13
    s.check(8)
    with pytest.raises(ValueError):
        MultiplicitySupport(3, 3).check(8)
    with pytest.raises(ValueError):
        MultiplicitySupport(0, 1).check(2)


def test_shift_matrix():
    S = shift_matrix(3)
    assert np.array_equal(S, np.eye(3, k=1))
    check_shift_matrix(S)
    check_shift_matrix(np.zeros((1, 1)))
    with pytest.raises(ValueError):
        check_shift_matrix(np.eye(2))
    with pytest.raises(ValueError):
        check_shift_matrix(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0.0]]))


def test_jordan_block_exact():
    A = np.array([[5.0, 1.0], [0.0, 5.0]])
    sup = MultiplicitySupport(1, 2)
    L = eig_equation_operator(A, 5.0, shift_matrix(2))
    assert operator_solve(L, np.zeros((2, 2)), theta=1e-10).kernel_dim == 2
    X0 = eig_initialize(A, 5.0, sup, 1e-10)
    assert abs(X0[1, 0]) <= 1e-14
    res = defective_eig_refine(A, 5.001, X0, sup)
    assert abs(res.eigenvalue - 5) <= 1e-12
    assert res.trace.status == CONVERGED_ZERO
    ratios = quadratic_ratios(res.trace.shifts, 1e-13)
    assert ratios and max(ratios) <= 10


def test_example3(example3):
    t0 = time.perf_counter()
    res = defective_eig(example3, 1.98, 2, 2, 3e-2, seed=0)
    assert time.perf_counter() - t0 < 1.0
    assert res.trace.rank == 13
    assert abs(res.eigenvalue - 2) <= 1e-4
    assert 5e-6 <= res.trace.residual <= 5e-5
    assert res.trace.shifts[-1] <= 1e-13
    assert 0.9 <= np.linalg.norm(res.X, 2) <= 1.1
    assert np.linalg.norm(res.X.conj().T @ res.X - np.eye(2)) <= 1e-3


@pytest.mark.parametrize("seed", range(4))
def test_example3_seeds(example3, seed):
    res = defective_eig(example3, 1.98, 2, 2, 3e-2, seed=seed)
    assert abs(res.eigenvalue - 2) <= 2e-4


def test_support_mismatch(example3):
    with pytest.raises(SupportMismatch):
        eig_initialize(example3, 1.98, MultiplicitySupport(1, 2), 3e-2)
    with pytest.raises(SupportMismatch):
        eig_initialize(example3, 1.98, MultiplicitySupport(2, 2), 1e-9)


def test_constructed_spectrum():
    A, rng = jordan_harness()
    E = rng.standard_normal((5, 5))
    At = A + 1e-8 * E / np.linalg.norm(E, 2)
    L = eig_equation_operator(At, 1.00001, shift_matrix(3))
    assert operator_solve(L, np.zeros((5, 3)), theta=1e-4).kernel_dim == 3
    res = defective_eig(At, 1.00001, 1, 3, 1e-4)
    assert abs(res.eigenvalue - 1) <= 1e-6 * res.condition


def test_columnwise_chain_exact():
    A, _ = jordan_harness()
    res = defective_eig(A, 1.00001, 1, 3, 1e-3)
    lam, X, S = res.eigenvalue, res.X, res.S
    B = A - lam * np.eye(5)
    assert np.linalg.norm(B @ X[:, 0]) <= 1e-10
    for j in range(1, 3):
        assert np.linalg.norm(B @ X[:, j] - X[:, :j] @ S[:j, j]) <= 1e-10
    f = eig_mapping(A, S)
    s = np.linalg.svd(f.J(f.domain.embed((lam, X))), compute_uv=False)
    assert f.domain.total_dim - int(np.sum(s > 1e-8 * s[0])) == 3


def test_perturbation_linearity():
    A, rng = jordan_harness()
    E = rng.standard_normal((5, 5))
    E /= np.linalg.norm(E, 2)
    ratios = [abs(defective_eig(A + eps * E, 1.00001, 1, 3, 1e-3).eigenvalue - 1) / eps
              for eps in (1e-4, 1e-6, 1e-8)]
    assert max(ratios) / min(ratios) <= 10


def test_seed_determinism(example3):
    a = defective_eig(example3, 1.98, 2, 2, 3e-2, seed=3)
    b = defective_eig(example3, 1.98, 2, 2, 3e-2, seed=3)
    assert a.eigenvalue == b.eigenvalue
    assert a.trace.residuals == b.trace.residuals


def test_jacobian_fd(rng, example3):
    f = eig_mapping(example3, np.array([[0, 0.7], [0, 0]]))
    x = (complex(*rng.standard_normal(2)), crandn(rng, 8, 2))
    assert fd_jacobian_check(f, x).deviation <= 1e-7
