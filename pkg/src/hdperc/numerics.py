"""Sparse Laplacians, Jacobi-preconditioned conjugate gradients, dense projection oracle."""
from dataclasses import dataclass
import math

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInput

DEFAULT_TOL = 1e-10


@dataclass
class SolveReport:
    solution: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool


def laplacian(slc):
    """Graph Laplacian ``D - A`` with unit conductance per edge; loops contribute nothing."""
    e = slc.edges
    e = e[e[:, 0] != e[:, 1]]
    n = slc.vertex_count
    rows = np.concatenate([e[:, 0], e[:, 1], e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0], e[:, 0], e[:, 1]])
    vals = np.concatenate([-np.ones(2 * len(e)), np.ones(2 * len(e))])
    # duplicates (parallel edges, diagonal) are summed by the COO -> CSR conversion
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def ground(L, vertex):
    """Delete row and column ``vertex`` (pin its potential to zero)."""
    keep = np.ones(L.shape[0], dtype=bool)
    keep[vertex] = False
    return L[keep][:, keep].tocsr(), keep


def default_max_iterations(n):
    return int(20 * math.sqrt(n) + 200)


def cg_solve(A, b, tolerance=DEFAULT_TOL, max_iterations=None):
    """Jacobi-preconditioned CG for a symmetric positive definite ``A``.

    ``b`` may be a matrix; its columns are solved as independent systems that
    share the matrix-vector products.  Convergence means
    ``||A x - b|| <= tolerance * ||b||`` for every column, checked on the true
    residual (the recursive one drifts); a drifted run is restarted.
    """
    b = np.asarray(b, dtype=float)
    vector = b.ndim == 1
    B = b.reshape(len(b), -1)
    n = B.shape[0]
    if max_iterations is None:
        max_iterations = default_max_iterations(n)
    diag = A.diagonal().astype(float)
    minv = 1.0 / np.where(diag > 0, diag, 1.0)
    target = tolerance * np.linalg.norm(B, axis=0)

    X = np.zeros_like(B)
    it = 0
    true_res = np.linalg.norm(B, axis=0)
    for _restart in range(4):
        R = B - A @ X
        true_res = np.linalg.norm(R, axis=0)
        if np.all(true_res <= target) or it >= max_iterations:
            break
        Z = minv[:, None] * R
        P = Z.copy()
        rz = np.einsum("ij,ij->j", R, Z)
        rnorm = true_res
        while it < max_iterations and np.any(rnorm > target):
            AP = A @ P
            pap = np.einsum("ij,ij->j", P, AP)
            live = (pap > 0) & (rnorm > target)
            alpha = np.where(live, rz / np.where(pap > 0, pap, 1.0), 0.0)
            X += alpha * P
            R -= alpha * AP
            rnorm = np.linalg.norm(R, axis=0)
            Z = minv[:, None] * R
            rz_new = np.einsum("ij,ij->j", R, Z)
            beta = np.where(rz > 0, rz_new / np.where(rz > 0, rz, 1.0), 0.0)
            P = Z + beta * P
            rz = rz_new
            it += 1
    true_res = np.linalg.norm(B - A @ X, axis=0)
    return SolveReport(
        solution=X[:, 0] if vector else X,
        residual_norm=float(true_res.max()) if true_res.size else 0.0,
        iterations=it,
        converged=bool(np.all(true_res <= target)),
    )


def dense_project(vectors, target):
    """Orthogonal projection of ``target`` onto span(``vectors``); test oracle only."""
    target = np.asarray(target, dtype=float)
    if len(vectors) == 0:
        return np.zeros_like(target)
    V = np.array([np.asarray(v, dtype=float) for v in vectors])
    if V.ndim != 2 or V.shape[1] != target.shape[0]:
        raise InvalidInput("vectors and target must share one dimension")
    # orthonormal basis of the row span via SVD (rank-revealing)
    U, s, _ = np.linalg.svd(V.T, full_matrices=False)
    rank = int(np.sum(s > s.max() * max(V.shape) * np.finfo(float).eps)) if s.size and s.max() > 0 else 0
    Q = U[:, :rank]
    return Q @ (Q.T @ target)


def star_vectors(slc, vertices=None):
    """Coboundaries ``d(1_v)`` as dense edge vectors, ``df(e) = f(head) - f(tail)``."""
    e = slc.edges
    vertices = range(slc.vertex_count) if vertices is None else vertices
    out = []
    for v in vertices:
        vec = (e[:, 1] == v).astype(float) - (e[:, 0] == v).astype(float)
        out.append(vec)
    return out


def cycle_vectors(slc):
    """Fundamental cycles of a spanning forest as signed edge vectors."""
    n, e = slc.vertex_count, slc.edges
    parent = -np.ones(n, dtype=np.int64)
    parent_edge = -np.ones(n, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    indptr, nbr, eid = slc.adjacency()
    seen = np.zeros(n, dtype=bool)
    tree = np.zeros(len(e), dtype=bool)
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        stack = [root]
        while stack:
            u = stack.pop()
            for k in range(indptr[u], indptr[u + 1]):
                v = nbr[k]
                if not seen[v]:
                    seen[v] = True
                    parent[v], parent_edge[v], depth[v] = u, eid[k], depth[u] + 1
                    tree[eid[k]] = True
                    stack.append(v)

    def path_to(u, w):
        # signed path u -> w through the tree, as edge vector
        vec = np.zeros(len(e))
        a, b = u, w
        up, down = [], []
        while depth[a] > depth[b]:
            up.append((parent_edge[a], a)); a = parent[a]
        while depth[b] > depth[a]:
            down.append((parent_edge[b], b)); b = parent[b]
        while a != b:
            up.append((parent_edge[a], a)); a = parent[a]
            down.append((parent_edge[b], b)); b = parent[b]
        for k, x in up:
            # traverse from x to its parent
            vec[k] += 1.0 if e[k, 0] == x else -1.0
        for k, x in down:
            # traverse from parent to x
            vec[k] += 1.0 if e[k, 1] == x else -1.0
        return vec

    cycles = []
    for k in np.flatnonzero(~tree):
        t, h = e[k]
        vec = np.zeros(len(e))
        if t != h:
            vec = path_to(h, t)
        vec[k] += 1.0  # traverse edge tail -> head, then return head -> tail
        cycles.append(vec)
    return cycles
