"""Bernoulli bond percolation on slices through the standard coupling.

Each edge carries a uniform label; the configuration at ``p`` keeps the edges
with label ``<= p``.  Sorting the labels once and inserting edges into a
union-find structure yields the whole monotone family of configurations in a
single pass.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import graphs, rng
from .errors import InvalidInput

DEFAULT_RESOLUTION = 512


@dataclass(eq=False)
class EdgeLabels:
    labels: np.ndarray
    seed: int
    slice: graphs.FiniteGraphSlice = field(repr=False)
    replicate: int = 0


@dataclass(eq=False)
class PercolationConfig:
    open: np.ndarray
    p: float


@dataclass
class SweepResult:
    p_grid: np.ndarray
    largest: np.ndarray
    second: np.ndarray
    origin_size: np.ndarray
    spanning_count: np.ndarray
    mean_size: np.ndarray
    macro_spanning: np.ndarray
    cluster_count: np.ndarray
    seed: int = 0

    def rows(self):
        for k, p in enumerate(self.p_grid):
            yield {"seed": self.seed, "p": float(p), "largest": int(self.largest[k]),
                   "second": int(self.second[k]), "origin_size": int(self.origin_size[k]),
                   "spanning_count": int(self.spanning_count[k]), "mean_size": float(self.mean_size[k])}


@dataclass
class ThresholdEstimate:
    value: float
    ci_low: float
    ci_high: float
    method: str
    samples: int
    heuristic: bool = False
    onsets: np.ndarray | None = field(default=None, repr=False)
    family: str = ""
    radius: int = 0
    reached: bool = True

    def half_width(self):
        return max(self.value - self.ci_low, self.ci_high - self.value)

    def to_dict(self):
        return {"family": self.family, "radius": self.radius, "samples": self.samples,
                "method": self.method, "value": self.value, "ci_low": self.ci_low,
                "ci_high": self.ci_high, "heuristic": self.heuristic}


def sample_labels(slc, seed, replicate=0):
    return EdgeLabels(rng.uniforms(seed, slc.edge_count, rng.LABELS, replicate), seed, slc, replicate)


def configuration(labels, p):
    return PercolationConfig(labels.labels <= p, p)


def default_grid(resolution=DEFAULT_RESOLUTION):
    return np.arange(resolution + 1) / resolution


def center_mask(slc, center_radius):
    if slc.distance is None:
        raise InvalidInput("slice carries no distances")
    return slc.distance <= center_radius


def default_center_radius(family, radius):
    """Radius of the central region used by the spanning statistics."""
    return math.ceil(radius / 4)


# ---------------------------------------------------------------------------
# union-find kernel


@numba.njit(cache=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@numba.njit(cache=True)
def _sweep_kernel(n, tails, heads, sorted_labels, grid, center, boundary, base, macro, full):
    G = grid.shape[0]
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    has_c = center.copy()
    has_b = boundary.copy()
    cnt = np.zeros(n + 1, dtype=np.int64)
    cnt[1] = n
    largest = 1 if n > 0 else 0
    sumsq = float(n)
    clusters = n
    spanning = 0
    macro_span = 0
    for v in range(n):
        if has_c[v] and has_b[v]:
            spanning += 1
            if macro <= 1:
                macro_span += 1
    out_largest = np.zeros(G, dtype=np.int64)
    out_second = np.zeros(G, dtype=np.int64)
    out_origin = np.zeros(G, dtype=np.int64)
    out_span = np.zeros(G, dtype=np.int64)
    out_macro = np.zeros(G, dtype=np.int64)
    out_mean = np.zeros(G)
    out_count = np.zeros(G, dtype=np.int64)
    M = sorted_labels.shape[0]
    k = 0
    for g in range(G):
        pg = grid[g]
        while k < M and sorted_labels[k] <= pg:
            a = _find(parent, tails[k])
            b = _find(parent, heads[k])
            k += 1
            if a == b:
                continue
            if size[a] < size[b]:
                a, b = b, a
            sa, sb = size[a], size[b]
            if has_c[a] and has_b[a]:
                spanning -= 1
                if sa >= macro:
                    macro_span -= 1
            if has_c[b] and has_b[b]:
                spanning -= 1
                if sb >= macro:
                    macro_span -= 1
            parent[b] = a
            size[a] = sa + sb
            has_c[a] = has_c[a] or has_c[b]
            has_b[a] = has_b[a] or has_b[b]
            if has_c[a] and has_b[a]:
                spanning += 1
                if sa + sb >= macro:
                    macro_span += 1
            sumsq += 2.0 * sa * sb
            clusters -= 1
            if full:
                cnt[sa] -= 1
                cnt[sb] -= 1
                cnt[sa + sb] += 1
            if sa + sb > largest:
                largest = sa + sb
        out_largest[g] = largest
        out_origin[g] = size[_find(parent, base)]
        out_span[g] = spanning
        out_macro[g] = macro_span
        out_mean[g] = sumsq / n if n > 0 else 0.0
        out_count[g] = clusters
        if full:
            s = largest
            if cnt[s] >= 2:
                out_second[g] = s
            else:
                s -= 1
                while s > 0 and cnt[s] == 0:
                    s -= 1
                out_second[g] = s
    return out_largest, out_second, out_origin, out_span, out_macro, out_mean, out_count


@numba.njit(cache=True)
def _partition_kernel(n, tails, heads, open_mask):
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for k in range(tails.shape[0]):
        if not open_mask[k]:
            continue
        a = _find(parent, tails[k])
        b = _find(parent, heads[k])
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
    roots = np.empty(n, dtype=np.int64)
    for v in range(n):
        roots[v] = _find(parent, v)
    return roots


def sweep(labels, p_grid=None, center_radius=None, macro_size=None, full=True):
    """Cluster statistics at every grid value from one sorted insertion pass."""
    slc = labels.slice
    grid = default_grid() if p_grid is None else np.asarray(p_grid, dtype=float)
    if np.any(np.diff(grid) < 0) or (grid.size and (grid[0] < 0 or grid[-1] > 1)):
        raise InvalidInput("p_grid must be sorted within [0, 1]")
    if center_radius is None:
        center_radius = default_center_radius(slc.family, slc.radius)
    n = slc.vertex_count
    if macro_size is None:
        macro_size = math.sqrt(n)
    order = np.argsort(labels.labels, kind="stable")
    e = slc.edges[order]
    center = center_mask(slc, center_radius)
    boundary = np.zeros(n, dtype=bool)
    boundary[slc.boundary_vertices] = True
    res = _sweep_kernel(n, e[:, 0].copy(), e[:, 1].copy(), labels.labels[order], grid,
                        center, boundary, slc.base_vertex, float(macro_size), full)
    return SweepResult(grid, *res[:2], res[2], res[3], res[5], res[4], res[6], seed=labels.seed)


def cluster_roots(labels, p):
    """Union-find partition of the configuration at ``p`` (root id per vertex)."""
    slc = labels.slice
    return _partition_kernel(slc.vertex_count, slc.edges[:, 0].copy(), slc.edges[:, 1].copy(), labels.labels <= p)


def bfs_components(slc, open_mask):
    """Connected components of the open subgraph (independent of union-find)."""
    e = slc.edges[open_mask]
    n = slc.vertex_count
    adj = csr_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    return connected_components(adj, directed=False)[1]


def same_partition(a, b):
    """True when two labelings of the vertices induce the same partition."""
    a, b = np.asarray(a), np.asarray(b)
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    pairs = np.unique(np.stack([ia, ib]), axis=1)
    return pairs.shape[1] == ia.max(initial=-1) + 1 == ib.max(initial=-1) + 1


# ---------------------------------------------------------------------------
# threshold estimators


def spanning_onset(res):
    """First grid p at which a center-to-boundary cluster exists (1.0 if never)."""
    hit = np.flatnonzero(res.spanning_count >= 1)
    return float(res.p_grid[hit[0]]) if hit.size else 1.0


def uniqueness_onset(res):
    """First grid p from which exactly one macroscopic spanning cluster persists.

    Returns ``(p, reached)``; ``reached`` is False when uniqueness never settles
    below p = 1.
    """
    ok = res.macro_spanning == 1
    bad = np.flatnonzero(~ok)
    start = 0 if bad.size == 0 else bad[-1] + 1
    if start >= len(ok):
        return 1.0, False
    p = float(res.p_grid[start])
    return p, p < 1.0


def bootstrap_median(values, seed, n_boot=2000, level=0.95):
    values = np.asarray(values, dtype=float)
    g = rng.generator(seed, rng.BOOTSTRAP)
    idx = g.integers(0, len(values), size=(n_boot, len(values)))
    meds = np.median(values[idx], axis=1)
    lo, hi = np.quantile(meds, [(1 - level) / 2, (1 + level) / 2])
    med = float(np.median(values))
    return med, min(float(lo), med), max(float(hi), med)


def _onsets_task(args):
    family, radius, budget, seed, reps, grid, center_radius, macro = args
    slc = graphs.build_slice(family, radius, budget)
    out = []
    for rep in reps:
        res = sweep(sample_labels(slc, seed, rep), grid, center_radius, macro, full=False)
        pu, reached = uniqueness_onset(res)
        out.append((spanning_onset(res), pu, reached))
    return out


def collect_onsets(family, radius, samples, seed, p_resolution=DEFAULT_RESOLUTION, center_radius=None,
                   budget=graphs.DEFAULT_BUDGET, jobs=1, macro_size=None):
    """Per-replicate (spanning onset, uniqueness onset, reached) triples."""
    grid = default_grid(p_resolution)
    if center_radius is None:
        center_radius = default_center_radius(family, radius)
    reps = list(range(samples))
    if jobs <= 1:
        return _onsets_task((family, radius, budget, seed, reps, grid, center_radius, macro_size))
    chunks = [reps[i::jobs] for i in range(jobs)]
    with ProcessPoolExecutor(jobs) as ex:
        parts = list(ex.map(_onsets_task, [(family, radius, budget, seed, c, grid, center_radius, macro_size)
                                           for c in chunks]))
    merged = {}
    for c, part in zip(chunks, parts):
        merged.update(zip(c, part))
    return [merged[r] for r in reps]


def _validate(family, radius, samples):
    if samples < 30:
        raise InvalidInput("threshold estimates need at least 30 samples")
    if radius < 1:
        raise InvalidInput("radius must be >= 1 for a nonempty boundary")


def estimate_pc(family, radius, samples=100, p_resolution=DEFAULT_RESOLUTION, seed=0, center_radius=None,
                budget=graphs.DEFAULT_BUDGET, jobs=1):
    """Median spanning onset with a bootstrap 95% interval."""
    _validate(family, radius, samples)
    if center_radius is None:
        center_radius = pc_center_radius(family, radius)
    onsets = np.array([t[0] for t in collect_onsets(family, radius, samples, seed, p_resolution,
                                                      center_radius, budget, jobs)])
    med, lo, hi = bootstrap_median(onsets, seed)
    return ThresholdEstimate(med, lo, hi, f"spanning-onset(center_radius={center_radius})", samples,
                             False, onsets, family.describe(), radius)


def pc_center_radius(family, radius):
    """Central region for the p_c statistic: the base vertex and its neighbours.

    A ball of a quarter of the radius makes crossing too easy.  On exponentially
    growing graphs its sphere is so large that some vertex reaches the boundary
    well below p_c, and on Z^2 the annulus is crossed with probability close to
    one at criticality.  In both cases the median onset is biased low.
    """
    return 1


def estimate_pu(family, radius, samples=100, p_resolution=DEFAULT_RESOLUTION, seed=0, center_radius=None,
                budget=graphs.DEFAULT_BUDGET, jobs=1):
    """Heuristic uniqueness threshold: median onset of a persistent unique
    macroscopic spanning cluster."""
    _validate(family, radius, samples)
    if center_radius is None:
        center_radius = default_center_radius(family, radius)
    trip = collect_onsets(family, radius, samples, seed, p_resolution, center_radius, budget, jobs)
    onsets = np.array([t[1] for t in trip])
    med, lo, hi = bootstrap_median(onsets, seed)
    reached = med < 1.0
    return ThresholdEstimate(med, lo, hi, f"unique-macroscopic-onset(center_radius={center_radius})", samples,
                             True, onsets, family.describe(), radius, reached)


# ---------------------------------------------------------------------------


def origin_cluster(labels, p):
    """Open cluster of the base vertex as a slice, numbered breadth first."""
    slc = labels.slice
    open_mask = labels.labels <= p
    indptr, nbr, eid = slc.adjacency()
    new_id = {slc.base_vertex: 0}
    order = [slc.base_vertex]
    edges, parents = [], []
    head = 0
    seen_edges = set()
    while head < len(order):
        u = order[head]
        for k in range(indptr[u], indptr[u + 1]):
            ek = int(eid[k])
            if not open_mask[ek] or ek in seen_edges:
                continue
            seen_edges.add(ek)
            v = int(nbr[k])
            if v not in new_id:
                new_id[v] = len(order)
                order.append(v)
            a, b = new_id[u], new_id[v]
            edges.append((min(a, b), max(a, b)))
            parents.append(ek)
        head += 1
    order = np.array(order, dtype=np.int64)
    bset = slc.boundary_set
    boundary = [new_id[v] for v in order.tolist() if v in bset]
    parents = np.array(parents, dtype=np.int64)
    return graphs.FiniteGraphSlice(
        vertex_count=len(order),
        edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        base_vertex=0,
        boundary_vertices=np.array(sorted(boundary), dtype=np.int64),
        vertex_orbit=slc.vertex_orbit[order],
        edge_orbit=slc.edge_orbit[parents] if len(parents) else np.zeros(0, dtype=np.int64),
        radius=slc.radius,
        distance=None if slc.distance is None else slc.distance[order],
        family=slc.family,
        parent_edges=parents,
    )


def expected_degree(family, p, weights=None):
    """Mean open degree of a base point under Bernoulli(p): deg * p."""
    if not 0 <= p <= 1:
        raise InvalidInput("p must lie in [0, 1]")
    return graphs.effective_degree(family, weights) * p
