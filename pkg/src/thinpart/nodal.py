"""Nodal domains, neighbour graphs, Courant sharpness and homotopy tests."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .discretization import count_components, label_components, lift_to_cover
from .eigensolver import CLUSTER_GAP, cluster, lowest_eigenpairs
from .errors import DegenerateInput, InvalidArgument, InvalidPartition


@dataclass(frozen=True, eq=False)
class NodalResult:
    labels: np.ndarray       # component id per cell
    count: int
    signs: np.ndarray        # +1 / -1 per component


def _face_pairs(shape, periodic=True):
    nt, nth = shape
    idx = np.arange(nt * nth).reshape(nt, nth)
    if periodic:
        p = [idx.ravel(), idx[:-1].ravel()]
        q = [np.roll(idx, -1, axis=1).ravel(), idx[1:].ravel()]
    else:
        p = [idx[:, :-1].ravel(), idx[:-1].ravel()]
        q = [idx[:, 1:].ravel(), idx[1:].ravel()]
    return np.concatenate(p), np.concatenate(q)


def _renumber(labels):
    """Relabel ids by order of first appearance (C order)."""
    ids, first, inv = np.unique(labels.ravel(), return_index=True, return_inverse=True)
    rank = np.empty(ids.size, dtype=int)
    rank[np.argsort(first)] = np.arange(ids.size)
    return rank[inv.ravel()].reshape(labels.shape)


def nodal_domains(u, grid=None, dead_band=1e-6, periodic=True):
    """Nodal domains of a grid function ``u`` of shape ``(nt, ntheta)``.

    Cells with ``|u| <= dead_band * max|u|`` are attached, round by round, to
    the neighbouring component sharing the most faces with them (ties to the
    lower id).  Same-sign components that end up touching are merged so that
    every component is a maximal constant-sign set.
    """
    u = np.asarray(u, dtype=float)
    if grid is not None:
        u = u.reshape(grid.shape)
    amax = np.abs(u).max() if u.size else 0.0
    thr = dead_band * amax
    if amax == 0 or not np.any(np.abs(u) > thr):
        raise DegenerateInput("grid function vanishes inside the dead band")

    npos, lpos = label_components(u > thr, periodic)
    nneg, lneg = label_components(u < -thr, periodic)
    labels = np.where(lpos >= 0, lpos, np.where(lneg >= 0, lneg + npos, -1))
    signs = np.concatenate([np.ones(npos, int), -np.ones(nneg, int)])

    p, q = _face_pairs(u.shape, periodic)
    flat = labels.ravel()
    ncomp = npos + nneg
    while np.any(flat < 0):
        dead = flat < 0
        votes = np.zeros((flat.size, ncomp))
        for a, c in ((p, q), (q, p)):
            sel = dead[a] & (flat[c] >= 0)
            np.add.at(votes, (a[sel], flat[c[sel]]), 1)
        has = dead & (votes.sum(axis=1) > 0)
        if not has.any():
            break
        flat = flat.copy()
        flat[has] = np.argmax(votes[has], axis=1)

    # merge touching components of equal sign
    sel = (flat[p] != flat[q]) & (signs[flat[p]] == signs[flat[q]])
    graph = sp.csr_matrix((np.ones(sel.sum()), (flat[p][sel], flat[q][sel])), shape=(ncomp, ncomp))
    count, comp = connected_components(graph, directed=False)
    merged = comp[flat].reshape(u.shape)
    merged = _renumber(merged)
    comp_sign = np.zeros(count, int)
    comp_sign[merged.ravel()] = signs[flat]
    return NodalResult(merged, int(count), comp_sign)


def sign_alternation_holds(result, periodic=True):
    p, q = _face_pairs(result.labels.shape, periodic)
    flat = result.labels.ravel()
    diff = flat[p] != flat[q]
    return bool(np.all(result.signs[flat[p][diff]] != result.signs[flat[q][diff]]))


@dataclass(frozen=True)
class NeighborGraph:
    k: int
    edges: dict = field(default_factory=dict)   # (i, j) with i < j -> shared face count

    def neighbors(self, i):
        return sorted({b if a == i else a for (a, b) in self.edges if i in (a, b)})

    def is_complete(self):
        return len(self.edges) == self.k * (self.k - 1) // 2

    def is_cycle(self):
        return (len(self.edges) == self.k and self.k >= 3
                and all(len(self.neighbors(i)) == 2 for i in range(self.k))
                and self._connected())

    def is_path(self):
        degs = sorted(len(self.neighbors(i)) for i in range(self.k))
        return (len(self.edges) == self.k - 1 and self._connected()
                and degs == [1, 1] + [2] * (self.k - 2))

    def _connected(self):
        seen, todo = {0}, [0]
        while todo:
            for j in self.neighbors(todo.pop()):
                if j not in seen:
                    seen.add(j)
                    todo.append(j)
        return len(seen) == self.k

    def edge_list_text(self):
        lines = [f"# k={self.k}"]
        lines += [f"{i} {j} {c}" for (i, j), c in sorted(self.edges.items())]
        return "\n".join(lines) + "\n"


def neighbor_graph(labels, grid=None, k=None, min_faces=2, periodic=True):
    """Neighbour graph of a labelled partition.

    Two parts are neighbours when they share at least ``min_faces`` cell faces.
    """
    labels = np.asarray(labels)
    if grid is not None:
        labels = labels.reshape(grid.shape)
    present = np.unique(labels)
    if k is None:
        k = int(present.max()) + 1
    missing = sorted(set(range(k)) - set(present.tolist()))
    if missing or present.min() < 0 or present.max() >= k:
        raise InvalidPartition(f"labels must cover 0..{k - 1}; missing {missing}")
    p, q = _face_pairs(labels.shape, periodic)
    a, b = labels.ravel()[p], labels.ravel()[q]
    sel = a != b
    lo, hi = np.minimum(a[sel], b[sel]), np.maximum(a[sel], b[sel])
    counts = {}
    for i, j in zip(lo.tolist(), hi.tolist()):
        counts[(i, j)] = counts.get((i, j), 0) + 1
    return NeighborGraph(k, {e: c for e, c in counts.items() if c >= min_faces})


def is_bipartite(graph):
    """BFS two-colouring. Returns ``(True, colours)`` or ``(False, None)``."""
    colour = [-1] * graph.k
    adj = {i: graph.neighbors(i) for i in range(graph.k)}
    for start in range(graph.k):
        if colour[start] >= 0:
            continue
        colour[start] = 0
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if colour[w] < 0:
                    colour[w] = 1 - colour[v]
                    queue.append(w)
                elif colour[w] == colour[v]:
                    return False, None
    return True, colour


@dataclass(frozen=True, eq=False)
class CourantCheck:
    k: int
    cluster: list            # 1-based indices of the eigenvalue cluster containing k
    values: np.ndarray       # all computed eigenvalues
    counts: list             # nodal counts of every sampled vector
    witness: bool
    ambiguous: bool
    max_count: int
    witness_vector: np.ndarray | None = None


def courant_sharp_check(op, k, tol=1e-8, angles=24, dead_band=1e-6, seed=0,
                        rel_gap=CLUSTER_GAP, pairs=None):
    """Look for an eigenfunction of ``lambda_k`` with exactly ``k`` nodal domains.

    The eigenvalue cluster containing index ``k`` is resolved; each basis
    vector and, for every pair of basis vectors, ``angles`` rotations
    ``cos(a) v1 + sin(a) v2`` are sampled.  A missing witness is not a proof
    of non-sharpness.
    """
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    if pairs is None:
        m = min(k + 3, op.dimension)
        pairs = lowest_eigenpairs(op, m, tol=tol, seed=seed)
    while True:
        vals = np.array([p.value for p in pairs])
        groups = cluster(vals, rel_gap)
        grp = next(g for g in groups if k - 1 in g)
        if grp[-1] < len(pairs) - 1 or len(pairs) == op.dimension:
            break
        pairs = lowest_eigenpairs(op, min(len(pairs) + 4, op.dimension), tol=tol, seed=seed)
    if len(pairs) < k:
        raise InvalidArgument(f"only {len(pairs)} eigenpairs available, k={k}")

    # flag near-degeneracies just outside the resolved cluster
    lam = vals[grp[0]]
    scale = max(abs(lam), 1.0)
    ambiguous = False
    for nb in (grp[0] - 1, grp[-1] + 1):
        if 0 <= nb < vals.size and abs(vals[nb] - lam) < 1e3 * rel_gap * scale:
            ambiguous = True

    vecs = [op.to_grid(pairs[i].vector) for i in grp]
    samples = list(vecs)
    for a in range(len(vecs)):
        for b in range(a + 1, len(vecs)):
            for t in np.linspace(0, np.pi, angles, endpoint=False)[1:]:
                samples.append(np.cos(t) * vecs[a] + np.sin(t) * vecs[b])
    counts = []
    witness_vec = None
    for s in samples:
        c = nodal_domains(s, dead_band=dead_band).count
        counts.append(c)
        if c == k and witness_vec is None:
            witness_vec = s
    return CourantCheck(k, [i + 1 for i in grp], vals, counts, witness_vec is not None,
                        ambiguous, max(counts), witness_vec)


def homotopy_class(mask, grid):
    """``"contractible"`` if the connected ``mask`` lifts to two sheets, else ``"noncontractible"``."""
    if grid.degree != 1:
        raise InvalidArgument("homotopy_class expects a degree-1 grid")
    mask = np.asarray(mask, dtype=bool).reshape(grid.shape)
    n = count_components(mask)
    if n != 1:
        raise InvalidArgument(f"mask has {n} components; classify them separately")
    lifted = count_components(lift_to_cover(grid, mask))
    return "contractible" if lifted == 2 else "noncontractible"
