import numpy as np
import pytest

from thinpart.discretization import annulus, assemble, build_grid, restrict_to_subdomain, strip
from thinpart.eigensolver import cluster, groundstate, lowest_eigenpairs, operator_scale
from thinpart.errors import InvalidArgument, NumericalFailure, StructuralError


def test_sparse_path_matches_dense():
    g = build_grid(strip(0.25), 64, 8)        # 512 cells: sparse path
    op = assemble(g)
    sparse = np.array([p.value for p in lowest_eigenpairs(op, 6)])
    dense = np.linalg.eigvalsh(op.matrix.toarray())[:6]
    assert np.allclose(sparse, dense, rtol=1e-9, atol=1e-9)


def test_residuals_and_orthonormality():
    op = assemble(build_grid(strip(0.3, bc="DN"), 96, 8))
    pairs = lowest_eigenpairs(op, 5)
    v = np.column_stack([p.vector for p in pairs])
    assert np.allclose(v.T @ v, np.eye(5), atol=1e-8)
    assert max(p.residual for p in pairs) <= 1e-8


def test_kernel_is_exact_zero_mode():
    op = assemble(build_grid(annulus(0.1), 128, 8))
    first = lowest_eigenpairs(op, 1)[0]
    assert first.value == 0.0
    u = op.to_grid(first.vector)
    assert np.ptp(u) <= 1e-12 * np.abs(u).max()


def test_weighted_normalization():
    op = assemble(build_grid(annulus(0.1, h2=[1, 0.2]), 64, 8))
    v = lowest_eigenpairs(op, 3)[2].vector
    u = op.to_grid(v)
    assert np.sum(u ** 2 * op.grid.weights) == pytest.approx(1.0, rel=1e-10)


def test_deterministic():
    op = assemble(build_grid(strip(0.2), 128, 8))
    a = lowest_eigenpairs(op, 4, seed=3)
    b = lowest_eigenpairs(op, 4, seed=3)
    assert all(np.array_equal(x.vector, y.vector) for x, y in zip(a, b))


def test_bad_arguments():
    op = assemble(build_grid(strip(0.2), 16, 4))
    with pytest.raises(InvalidArgument):
        lowest_eigenpairs(op, 0)
    with pytest.raises(InvalidArgument):
        lowest_eigenpairs(op, op.dimension + 1)
    with pytest.raises(InvalidArgument):
        lowest_eigenpairs(op, 2, tol=0)


def test_impossible_tolerance_raises():
    op = assemble(build_grid(strip(0.2), 128, 8))
    with pytest.raises(NumericalFailure):
        lowest_eigenpairs(op, 3, tol=1e-30)


def test_cluster():
    assert cluster([0.0, 1.0, 1.0 + 1e-9, 4.0]) == [[0], [1, 2], [3]]
    assert cluster([]) == []


def test_operator_scale_bounds_spectrum():
    op = assemble(build_grid(strip(0.2), 16, 4))
    top = np.linalg.eigvalsh(op.matrix.toarray())[-1]
    assert top <= operator_scale(op) * (1 + 1e-12)


def test_groundstate_positive_and_sign_check():
    g = build_grid(strip(0.2), 64, 8)
    op = assemble(g)
    theta, _ = g.coordinates()
    lam, phi = groundstate(restrict_to_subdomain(op, g, theta < 0.4))
    assert phi.min() >= 0 and phi[theta >= 0.4].max() == 0
    # two equal disjoint pieces give a degenerate groundstate with mixed signs
    two = (theta < 0.2) | ((theta > 0.5) & (theta < 0.7))
    sub = restrict_to_subdomain(op, g, two)
    try:
        groundstate(sub, check_sign=True)
    except StructuralError:
        pass
    lam2, _ = groundstate(sub, check_sign=False)
    assert lam2 > lam
