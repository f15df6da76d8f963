"""Lowest eigenpairs of the discrete operators.

The solver is implicitly restarted Lanczos (ARPACK through
:func:`scipy.sparse.linalg.eigsh`) in shift-invert mode with a shift below
the spectrum.  When the operator annihilates ``sqrt(w)`` (all-Neumann, no
restriction) that kernel vector is deflated explicitly: it is returned as the
exact zero mode and the remaining pairs are computed for
``A + alpha z z^T`` with a Sherman-Morrison solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidArgument, NumericalFailure, StructuralError

DEFAULT_TOL = 1e-8
CLUSTER_GAP = 1e-6


@dataclass(frozen=True, eq=False)
class EigenPair:
    """One eigenpair.

    ``vector`` is Euclidean-unit in operator coordinates, which is unit norm in
    the cell-area weighted L2 product for the grid function
    ``op.to_grid(vector)``.  ``residual`` is ``|A v - value v| / |A|_inf``.
    """

    value: float
    vector: np.ndarray
    residual: float


def operator_scale(op):
    """Cheap upper bound on the spectral radius (max absolute row sum)."""
    a = abs(op.matrix)
    return float(np.max(a.sum(axis=1))) if op.dimension else 1.0


def _factorized_shift(matrix, sigma):
    shifted = (matrix - sigma * sp.identity(matrix.shape[0], format="csc")).tocsc()
    return spla.splu(shifted)


def _kernel_vector(op):
    z = np.sqrt(op.weights)
    return z / np.linalg.norm(z)


def _relative_residuals(a, values, vectors, scale):
    r = a @ vectors - vectors * values[None, :]
    return np.linalg.norm(r, axis=0) / scale


def lowest_eigenpairs(op, m, tol=DEFAULT_TOL, seed=0, extra=2, maxiter=None):
    """Return the ``m`` lowest eigenpairs of ``op.matrix`` in ascending order.

    ``extra`` additional Ritz pairs are carried (block of ``m + extra``) so
    double eigenvalues at the end of the requested range are resolved.
    Raises :class:`NumericalFailure` if some returned pair misses ``tol``.
    """
    n = op.dimension
    if m < 1 or m > n:
        raise InvalidArgument(f"need 1 <= m <= dimension ({n}), got m={m}")
    if not tol > 0:
        raise InvalidArgument("tol must be positive")
    a = op.matrix
    scale = operator_scale(op)
    rng = np.random.default_rng(seed)

    if n <= 400:
        vals, vecs = np.linalg.eigh(a.toarray())
        vals, vecs = vals[:m], vecs[:, :m]
        return _package(a, vals, vecs, scale, tol)

    deflate = op.kernel_constant
    z = _kernel_vector(op) if deflate else None
    want = min(m + extra - (1 if deflate else 0), n - 2)
    sigma = -1.0
    lu = _factorized_shift(a, sigma)

    if deflate and want > 0:
        alpha = 2.0 * scale
        sz = lu.solve(z)
        denom = 1.0 + alpha * float(z @ sz)

        def solve(x):
            y = lu.solve(np.asarray(x, dtype=float).ravel())
            return y - sz * (alpha * float(z @ y) / denom)

        def matvec(x):
            x = np.asarray(x, dtype=float).ravel()
            return a @ x + alpha * z * float(z @ x)

        a_eff = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
    else:
        def solve(x):
            return lu.solve(np.asarray(x, dtype=float).ravel())
        a_eff = a

    vals = np.empty(0)
    vecs = np.empty((n, 0))
    if want > 0:
        v0 = rng.standard_normal(n)
        if deflate:
            v0 -= z * (z @ v0)
        opinv = spla.LinearOperator((n, n), matvec=solve, dtype=float)
        try:
            vals, vecs = spla.eigsh(a_eff, k=want, sigma=sigma, which="LM", OPinv=opinv,
                                    v0=v0, tol=tol * 1e-2, maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            raise NumericalFailure("Lanczos iteration did not converge",
                                   {"converged_values": exc.eigenvalues}) from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        # Rayleigh-Ritz on the true operator cleans up the shift-invert output
        q, _ = np.linalg.qr(vecs if z is None else vecs - np.outer(z, z @ vecs))
        small = q.T @ (a @ q)
        vals, y = np.linalg.eigh(0.5 * (small + small.T))
        vecs = q @ y
    if deflate:
        vals = np.concatenate([[0.0], vals])
        vecs = np.column_stack([z, vecs])
    return _package(a, vals[:m], vecs[:, :m], scale, tol)


def _package(a, vals, vecs, scale, tol):
    res = _relative_residuals(a, vals, vecs, scale)
    if np.any(res > tol):
        raise NumericalFailure(f"residual {res.max():.2e} above tol {tol:.1e}",
                               {"residuals": res, "values": vals})
    pairs = []
    for k in range(vals.size):
        v = vecs[:, k]
        # deterministic sign: largest-magnitude entry positive
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        pairs.append(EigenPair(float(vals[k]), v.copy(), float(res[k])))
    return pairs


def cluster(values, rel_gap=CLUSTER_GAP, abs_floor=None):
    """Group ascending values into clusters of near-equal entries.

    Two neighbours belong to one cluster when their gap is below
    ``rel_gap * max(|value|, abs_floor)``.  Returns a list of index lists.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return []
    floor = abs_floor if abs_floor is not None else rel_gap * max(1.0, float(np.max(np.abs(values))))
    groups = [[0]]
    for k in range(1, values.size):
        ref = max(abs(values[k]), abs(values[k - 1]))
        if values[k] - values[k - 1] <= rel_gap * ref or values[k] - values[k - 1] <= floor:
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


def groundstate(op, tol=DEFAULT_TOL, seed=0, check_sign=True):
    """Lowest eigenvalue and nonnegative groundstate grid function.

    Returns ``(value, phi)`` with ``phi`` a ``(nt, ntheta)`` array that is zero
    off the operator's active cells and has unit weighted L2 norm.
    """
    pair = lowest_eigenpairs(op, 1, tol=tol, seed=seed, extra=1)[0]
    v = pair.vector
    if v.sum() < 0:
        v = -v
    if check_sign:
        if v.min() < -1e-6 * np.abs(v).max():
            raise StructuralError("groundstate changes sign; the mask is probably disconnected")
    v = np.clip(v, 0.0, None) if check_sign else v
    return pair.value, op.to_grid(v)
