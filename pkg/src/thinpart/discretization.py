"""Grids and finite-difference negative Laplacians on strips and annuli.

Both domain families are discretized on a cell-centered tensor grid of shape
``(nt, ntheta)``: rows follow the transverse coordinate, columns the periodic
angular one.  Grid functions are stored as ``(nt, ntheta)`` arrays; operators
act on flat vectors in C order (``j * ntheta + i``).

The angular coordinate ``theta`` always runs over ``[0, degree)`` so that one
sheet has unit length.  For strips this *is* the physical coordinate (the
circle has perimeter 1); for annuli the physical angle is ``2*pi*theta``.

Operators are built from a stiffness form ``K`` and diagonal cell areas
``w``; the symmetric matrix handed to the eigensolver is
``W^{-1/2} K W^{-1/2}`` so that the discrete L2 inner product is the
Euclidean one on ``sqrt(w) * u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import InvalidArgument, InvalidDomain

NEUMANN = "N"
DIRICHLET = "D"
STRIP = "strip"
ANNULUS = "annulus"


def _check_bc(value):
    if value not in (NEUMANN, DIRICHLET):
        raise InvalidArgument(f"boundary condition must be 'N' or 'D', got {value!r}")
    return value


def parse_bc(bc):
    """Accept ``"ND"``, ``("N", "D")`` or ``"neumann-dirichlet"``-like pairs."""
    if isinstance(bc, str):
        s = bc.strip().upper()
        if len(s) == 2:
            return _check_bc(s[0]), _check_bc(s[1])
        parts = [p for p in s.replace("_", "-").split("-") if p]
        if len(parts) == 2:
            return _check_bc(parts[0][0]), _check_bc(parts[1][0])
        raise InvalidArgument(f"cannot parse boundary conditions {bc!r}")
    bottom, top = bc
    return _check_bc(str(bottom).upper()[0]), _check_bc(str(top).upper()[0])


def fourier_profile(coeffs, phi):
    """Evaluate ``c0 + sum_k a_k cos(k phi) + b_k sin(k phi)`` and its derivative.

    ``coeffs`` is the flat list ``[c0, a1, b1, a2, b2, ...]``.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    phi = np.asarray(phi, dtype=float)
    val = np.full_like(phi, coeffs[0] if coeffs.size else 0.0)
    der = np.zeros_like(phi)
    for k in range(1, (coeffs.size - 1) // 2 + 1):
        a, b = coeffs[2 * k - 1], coeffs[2 * k]
        val += a * np.cos(k * phi) + b * np.sin(k * phi)
        der += k * (-a * np.sin(k * phi) + b * np.cos(k * phi))
    if coeffs.size % 2 == 0 and coeffs.size > 1:
        # trailing cosine coefficient without its sine partner
        k = coeffs.size // 2
        val += coeffs[-1] * np.cos(k * phi)
        der += -k * coeffs[-1] * np.sin(k * phi)
    return val, der


@dataclass(frozen=True)
class DomainSpec:
    """Cylinder strip ``S^1 x (0, b)`` or annulus-like domain around the unit circle.

    For annuli the region is ``1 + b*h1(phi) < r < 1 + b*h2(phi)`` with
    ``h1``/``h2`` given as Fourier coefficient lists.  ``degree`` 2 means the
    double covering (angular period doubled).
    """

    kind: str = STRIP
    b: float = 0.2
    degree: int = 1
    bc_bottom: str = NEUMANN
    bc_top: str = NEUMANN
    h1: tuple = (0.0,)
    h2: tuple = (1.0,)

    def __post_init__(self):
        if self.kind not in (STRIP, ANNULUS):
            raise InvalidDomain(f"unknown domain kind {self.kind!r}")
        if not self.b > 0:
            raise InvalidDomain(f"width b must be positive, got {self.b}")
        if self.degree not in (1, 2):
            raise InvalidDomain("only degree 1 and the double covering (degree 2) are supported")
        _check_bc(self.bc_bottom)
        _check_bc(self.bc_top)
        object.__setattr__(self, "h1", tuple(float(c) for c in self.h1))
        object.__setattr__(self, "h2", tuple(float(c) for c in self.h2))

    @property
    def bc(self):
        return self.bc_bottom + self.bc_top

    @property
    def is_round(self):
        return self.kind == ANNULUS and len(self.h1) == 1 and len(self.h2) == 1

    def with_bc(self, bc):
        bottom, top = parse_bc(bc)
        return replace(self, bc_bottom=bottom, bc_top=top)

    def with_degree(self, degree):
        return replace(self, degree=degree)


def strip(b, degree=1, bc="NN"):
    bottom, top = parse_bc(bc)
    return DomainSpec(STRIP, b=b, degree=degree, bc_bottom=bottom, bc_top=top)


def annulus(b, h1=(0.0,), h2=(1.0,), degree=1, bc="NN"):
    """Annulus-like domain; ``bc`` is (inner, outer)."""
    bottom, top = parse_bc(bc)
    return DomainSpec(ANNULUS, b=b, degree=degree, bc_bottom=bottom, bc_top=top,
                      h1=tuple(np.atleast_1d(h1)), h2=tuple(np.atleast_1d(h2)))


@dataclass(frozen=True, eq=False)
class Grid:
    domain: DomainSpec
    ntheta: int
    nt: int
    theta: np.ndarray        # cell centers in [0, degree)
    t: np.ndarray            # transverse centers: physical (strip) or mapped in (0, 1) (annulus)
    htheta: float
    ht: float
    weights: np.ndarray      # cell areas, shape (nt, ntheta)
    radius: np.ndarray | None = None

    @property
    def shape(self):
        return (self.nt, self.ntheta)

    @property
    def size(self):
        return self.nt * self.ntheta

    @property
    def degree(self):
        return self.domain.degree

    def index(self, j, i):
        return j * self.ntheta + (i % self.ntheta)

    def coordinates(self):
        """Broadcast ``(theta, t)`` center coordinates, each of shape ``(nt, ntheta)``."""
        return np.meshgrid(self.theta, self.t)


def build_grid(domain, ntheta, nt):
    if ntheta < 8 or nt < 2:
        raise InvalidArgument(f"grid too small: ntheta={ntheta}, nt={nt} (need >= 8, >= 2)")
    if ntheta % (2 * domain.degree):
        raise InvalidArgument(f"ntheta={ntheta} must be divisible by 2*degree={2 * domain.degree}")
    htheta = domain.degree / ntheta
    theta = (np.arange(ntheta) + 0.5) * htheta
    if domain.kind == STRIP:
        ht = domain.b / nt
        t = (np.arange(nt) + 0.5) * ht
        weights = np.full((nt, ntheta), htheta * ht)
        return Grid(domain, ntheta, nt, theta, t, htheta, ht, weights)

    ht = 1.0 / nt
    t = (np.arange(nt) + 0.5) * ht
    phi = 2 * np.pi * theta
    h1, _ = fourier_profile(domain.h1, phi)
    h2, _ = fourier_profile(domain.h2, phi)
    if np.any(h1 >= h2):
        raise InvalidDomain("annulus profile requires h1 < h2 at every angular sample")
    radius = 1.0 + domain.b * (h1[None, :] + t[:, None] * (h2 - h1)[None, :])
    if np.any(radius <= 0):
        raise InvalidDomain("annulus profile reaches the origin")
    r_s = domain.b * (h2 - h1)[None, :]
    weights = r_s * radius * ht * (2 * np.pi * htheta)
    return Grid(domain, ntheta, nt, theta, t, htheta, ht, weights, radius)


@dataclass(frozen=True, eq=False)
class SymmetricOperator:
    """Discrete negative Laplacian on the ``active`` cells of a grid.

    ``matrix`` is the symmetric matrix ``W^{-1/2} K W^{-1/2}``; eigenvectors
    ``v`` of it correspond to grid functions ``u = v / sqrt(w)``.
    ``faces`` lists every interior face of the ambient grid as
    ``(p, q, c)`` (flat cell indices and stiffness coupling) and is what
    :func:`restrict_to_subdomain` uses to impose interface Dirichlet data.
    """

    grid: Grid
    matrix: sp.csr_matrix
    stiffness: sp.csr_matrix
    weights: np.ndarray
    active: np.ndarray
    faces: tuple | None = None
    label: str = ""
    kernel_constant: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def dimension(self):
        return self.matrix.shape[0]

    def entries(self):
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data

    def to_grid(self, vector, fill=0.0):
        """Map an eigenvector to the grid function ``u`` (cell-area normalized)."""
        out = np.full(self.grid.size, fill, dtype=float)
        out[self.active] = np.asarray(vector) / np.sqrt(self.weights)
        return out.reshape(self.grid.shape)

    def from_grid(self, values):
        values = np.asarray(values, dtype=float).reshape(-1)
        return values[self.active] * np.sqrt(self.weights)

    def mask(self):
        m = np.zeros(self.grid.size, dtype=bool)
        m[self.active] = True
        return m.reshape(self.grid.shape)


def _exact_symmetric(mat):
    """Rebuild ``mat`` from its upper triangle so transposed entries agree bitwise."""
    upper = sp.triu(mat, k=1, format="csr")
    return (sp.diags(mat.diagonal()) + upper + upper.T).tocsr()


def _weighted(stiffness, weights):
    s = 1.0 / np.sqrt(weights)
    coo = stiffness.tocoo()
    data = coo.data * (s[coo.row] * s[coo.col])
    return _exact_symmetric(sp.csr_matrix((data, (coo.row, coo.col)), shape=stiffness.shape))


def _face_laplacian(n, p, q, c):
    rows = np.concatenate([p, q, p, q])
    cols = np.concatenate([p, q, q, p])
    data = np.concatenate([c, c, -c, -c])
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def _strip_coefficients(grid):
    nt, nth = grid.shape
    c_theta = np.full((nt, nth), grid.ht / grid.htheta)
    c_t = np.full((nt - 1, nth), grid.htheta / grid.ht)
    c_bottom = np.full(nth, grid.htheta / grid.ht)
    return c_theta, c_t, c_bottom, c_bottom.copy(), None


def _annulus_coefficients(grid):
    """Face couplings for the polar Laplacian in mapped coordinates ``(phi, s)``.

    With ``r = 1 + b(h1 + s(h2 - h1))`` the Dirichlet form is
    ``int a_ss u_s^2 + 2 a_sp u_s u_p + a_pp u_p^2  ds dphi`` where
    ``a_ss = (r_p^2 + r^2)/(r_s r)``, ``a_sp = -r_p / r``, ``a_pp = r_s / r``.
    """
    dom = grid.domain
    nt, nth = grid.shape
    dphi = 2 * np.pi * grid.htheta
    ds = grid.ht

    def geometry(theta, s):
        phi = 2 * np.pi * theta
        h1, d1 = fourier_profile(dom.h1, phi)
        h2, d2 = fourier_profile(dom.h2, phi)
        s = np.asarray(s)[:, None]
        r = 1.0 + dom.b * (h1 + s * (h2 - h1))
        r_s = dom.b * (h2 - h1) + 0 * s
        r_p = dom.b * (d1 + s * (d2 - d1))
        return r, r_s, r_p

    theta_faces = grid.theta + 0.5 * grid.htheta
    r, r_s, _ = geometry(theta_faces, grid.t)
    c_theta = (r_s / r) * ds / dphi

    s_faces = np.arange(1, nt) * ds
    r, r_s, r_p = geometry(grid.theta, s_faces)
    c_t = (r_p ** 2 + r ** 2) / (r_s * r) * dphi / ds

    ends = []
    for s_edge in (0.0, 1.0):
        r, r_s, r_p = geometry(grid.theta, [s_edge])
        ends.append(((r_p ** 2 + r ** 2) / (r_s * r) * dphi / ds)[0])

    cross = None
    if not dom.is_round:
        r, r_s, r_p = geometry(theta_faces, s_faces)
        cross = (-r_p / r) * ds * dphi          # vertex weights, shape (nt-1, nth)
    return c_theta, c_t, ends[0], ends[1], cross


def _cross_term(grid, weight):
    """Symmetrized 9-point mixed-derivative form at interior vertices."""
    nt, nth = grid.shape
    n = grid.size
    dphi = 2 * np.pi * grid.htheta
    ds = grid.ht
    j, i = np.meshgrid(np.arange(nt - 1), np.arange(nth), indexing="ij")
    j, i = j.ravel(), i.ravel()
    sw = j * nth + i
    se = j * nth + (i + 1) % nth
    nw = (j + 1) * nth + i
    ne = (j + 1) * nth + (i + 1) % nth
    nv = sw.size
    vid = np.arange(nv)
    rows = np.repeat(vid, 4)
    gs = sp.csr_matrix((np.tile([-1.0, -1.0, 1.0, 1.0], nv) / (2 * ds),
                        (rows, np.stack([sw, se, nw, ne], axis=1).ravel())), shape=(nv, n))
    gp = sp.csr_matrix((np.tile([-1.0, 1.0, -1.0, 1.0], nv) / (2 * dphi),
                        (rows, np.stack([sw, se, nw, ne], axis=1).ravel())), shape=(nv, n))
    d = sp.diags(weight.ravel())
    half = gs.T @ d @ gp
    return (half + half.T).tocsr()


def assemble(grid, bc=None):
    """Five-point (nine-point for profiled annuli) negative Laplacian.

    Neumann faces contribute nothing (mirror ghost); Dirichlet faces use the
    ghost value ``-u`` which doubles the face coupling on the diagonal.
    ``bc`` overrides the domain's own bottom/top conditions.
    """
    dom = grid.domain
    bottom, top = parse_bc(bc) if bc is not None else (dom.bc_bottom, dom.bc_top)
    nt, nth = grid.shape
    n = grid.size
    if dom.kind == STRIP:
        c_theta, c_t, c_bot, c_top, cross = _strip_coefficients(grid)
    else:
        c_theta, c_t, c_bot, c_top, cross = _annulus_coefficients(grid)

    idx = np.arange(n).reshape(nt, nth)
    p = [idx.ravel(), idx[:-1].ravel()]
    q = [np.roll(idx, -1, axis=1).ravel(), idx[1:].ravel()]
    c = [c_theta.ravel(), c_t.ravel()]
    fp, fq, fc = np.concatenate(p), np.concatenate(q), np.concatenate(c)
    k = _face_laplacian(n, fp, fq, fc)

    diag = np.zeros(n)
    if bottom == DIRICHLET:
        diag[idx[0]] += 2 * c_bot
    if top == DIRICHLET:
        diag[idx[-1]] += 2 * c_top
    k = k + sp.diags(diag)
    if cross is not None:
        k = k + _cross_term(grid, cross)
    k = _exact_symmetric(k.tocsr())
    w = grid.weights.ravel().copy()
    return SymmetricOperator(
        grid=grid,
        matrix=_weighted(k, w),
        stiffness=k,
        weights=w,
        active=np.arange(n),
        faces=(fp, fq, fc),
        label=f"{dom.kind}-{bottom}{top}",
        kernel_constant=(bottom == NEUMANN and top == NEUMANN),
    )


def _as_flat_mask(grid, mask):
    m = np.asarray(mask)
    if m.dtype == bool:
        if m.size != grid.size:
            raise InvalidArgument(f"mask has {m.size} cells, grid has {grid.size}")
        return m.reshape(-1)
    flat = np.zeros(grid.size, dtype=bool)
    flat[m.reshape(-1)] = True
    return flat


def restrict_to_subdomain(op, grid, mask):
    """Operator on ``mask`` with Dirichlet data on faces towards excluded cells.

    Outer-boundary faces keep whatever condition ``op`` carries.  ``op`` may
    itself be a restriction; ``mask`` is intersected with its active set.
    """
    if op.faces is None:
        raise InvalidArgument("operator does not carry face data (deck blocks cannot be restricted)")
    flat = _as_flat_mask(grid, mask)
    parent = np.zeros(grid.size, dtype=bool)
    parent[op.active] = True
    flat &= parent
    if not flat.any():
        raise InvalidArgument("empty mask")
    if flat.sum() == op.dimension:
        return op

    local = np.full(grid.size, -1)
    local[op.active] = np.arange(op.dimension)
    keep = local[np.flatnonzero(flat)]
    k = op.stiffness[keep][:, keep]

    fp, fq, fc = op.faces
    cut_pq = flat[fp] & parent[fq] & ~flat[fq]
    cut_qp = flat[fq] & parent[fp] & ~flat[fp]
    extra = np.zeros(grid.size)
    np.add.at(extra, fp[cut_pq], fc[cut_pq])
    np.add.at(extra, fq[cut_qp], fc[cut_qp])
    active = np.flatnonzero(flat)
    k = _exact_symmetric((k + sp.diags(extra[active])).tocsr())
    w = op.weights[keep]
    return SymmetricOperator(
        grid=grid,
        matrix=_weighted(k, w),
        stiffness=k,
        weights=w,
        active=active,
        faces=op.faces,
        label=op.label + "|sub",
        kernel_constant=False,
    )


def cover_grid(grid):
    """The degree-2 grid over a degree-1 grid (same nt, doubled ntheta)."""
    if grid.degree != 1:
        raise InvalidArgument("cover_grid expects a degree-1 grid")
    return build_grid(grid.domain.with_degree(2), 2 * grid.ntheta, grid.nt)


def lift_to_cover(grid1, values, grid2=None):
    """Pull back a field or mask on ``grid1`` to the double covering.

    The lifted array repeats with period one sheet in theta.
    """
    if grid1.degree != 1:
        raise InvalidArgument("lift_to_cover expects a degree-1 base grid")
    if grid2 is not None and (grid2.degree != 2 or grid2.nt != grid1.nt
                              or grid2.ntheta != 2 * grid1.ntheta):
        raise InvalidArgument("cover grid must have degree 2, equal nt and doubled ntheta")
    arr = np.asarray(values).reshape(grid1.shape)
    return np.concatenate([arr, arr], axis=1)


def grid_adjacency(shape, periodic=True):
    """Face-adjacency graph of an ``(nt, ntheta)`` cell grid as a sparse matrix."""
    nt, nth = shape
    idx = np.arange(nt * nth).reshape(nt, nth)
    right = np.roll(idx, -1, axis=1) if periodic else idx[:, 1:]
    left = idx if periodic else idx[:, :-1]
    p = np.concatenate([left.ravel(), idx[:-1].ravel()])
    q = np.concatenate([right.ravel(), idx[1:].ravel()])
    ones = np.ones(p.size, dtype=np.int8)
    n = nt * nth
    return sp.csr_matrix((ones, (p, q)), shape=(n, n))


def label_components(mask, periodic=True):
    """Connected components of a boolean grid mask under face adjacency.

    Returns ``(count, labels)`` with ``labels == -1`` outside the mask.
    Components are numbered in order of their first cell (C order).
    """
    mask = np.asarray(mask, dtype=bool)
    flat = mask.ravel()
    adj = grid_adjacency(mask.shape, periodic)
    cells = np.flatnonzero(flat)
    if cells.size == 0:
        return 0, np.full(mask.shape, -1)
    sub = adj[cells][:, cells]
    count, comp = connected_components(sub, directed=False)
    # renumber by first appearance for determinism
    _, first = np.unique(comp, return_index=True)
    order = np.argsort(first)
    remap = np.empty(count, dtype=int)
    remap[order] = np.arange(count)
    labels = np.full(flat.size, -1)
    labels[cells] = remap[comp]
    return count, labels.reshape(mask.shape)


def count_components(mask, periodic=True):
    return label_components(mask, periodic)[0]


def deck_permutation(grid):
    """Flat-index permutation of the deck transformation ``theta -> theta + 1``."""
    if grid.degree != 2:
        raise InvalidArgument("deck transformation needs a degree-2 grid")
    idx = np.arange(grid.size).reshape(grid.shape)
    return np.roll(idx, -grid.ntheta // 2, axis=1).ravel()


@dataclass(frozen=True, eq=False)
class DeckSplit:
    """Symmetric and antisymmetric blocks of an operator on the double covering.

    Both blocks act on the cells of the first sheet.  A block eigenvector ``v``
    lifts to ``[v, +v] / sqrt(2)`` (symmetric) or ``[v, -v] / sqrt(2)``
    (antisymmetric) on the full cover, sheet by sheet in each row.
    """

    symmetric: SymmetricOperator
    antisymmetric: SymmetricOperator
    cover: SymmetricOperator

    def lift(self, vector, parity):
        sign = 1.0 if parity == "symmetric" else -1.0
        g = self.cover.grid
        half = g.ntheta // 2
        v = np.asarray(vector).reshape(g.nt, half) / np.sqrt(2.0)
        return np.concatenate([v, sign * v], axis=1).ravel()


def deck_split(op):
    grid = op.grid
    if grid.degree != 2:
        raise InvalidArgument("deck_split needs an operator on a degree-2 grid")
    if op.dimension != grid.size:
        raise InvalidArgument("deck_split needs an unrestricted operator")
    half = grid.ntheta // 2
    idx = np.arange(grid.size).reshape(grid.shape)
    sheet1 = idx[:, :half].ravel()
    sheet2 = idx[:, half:].ravel()
    m = sheet1.size
    cols = np.arange(m)
    blocks = []
    base_grid = build_grid(grid.domain.with_degree(1), half, grid.nt)
    for sign, name in ((1.0, "symmetric"), (-1.0, "antisymmetric")):
        q = sp.csr_matrix(
            (np.concatenate([np.full(m, 1.0), np.full(m, sign)]) / np.sqrt(2.0),
             (np.concatenate([sheet1, sheet2]), np.concatenate([cols, cols]))),
            shape=(grid.size, m))
        a = _exact_symmetric((q.T @ op.matrix @ q).tocsr())
        k = _exact_symmetric((q.T @ op.stiffness @ q).tocsr())
        blocks.append(SymmetricOperator(
            grid=base_grid,
            matrix=a,
            stiffness=k,
            weights=op.weights[sheet1],
            active=np.arange(m),
            faces=None,
            label=f"{op.label}|{name}",
            kernel_constant=op.kernel_constant and sign > 0,
            meta={"deck_class": name},
        ))
    return DeckSplit(blocks[0], blocks[1], op)
