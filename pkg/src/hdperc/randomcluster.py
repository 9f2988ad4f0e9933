"""Free and wired random-cluster measures on slices by single-edge heat bath.

The wired measure on a slice is the free measure on the slice with its
boundary identified to one vertex, so both run the same chain; the wired one
simply runs on the contracted slice (edge indices are preserved).
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from . import graphs, rng
from .errors import InvalidInput

FREE = "free"
WIRED = "wired"


@dataclass(frozen=True)
class RCParams:
    p: float
    q: float
    boundary: str = FREE

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidInput("p must lie in [0, 1]")
        if not self.q >= 1.0 or math.isinf(self.q):
            raise InvalidInput("q must be finite and >= 1")
        if self.boundary not in (FREE, WIRED):
            raise InvalidInput("boundary must be 'free' or 'wired'")

    def closed_branch(self):
        """Opening probability when the endpoints are not connected off the edge."""
        p, q = self.p, self.q
        return p / (p + (1.0 - p) * q) if p > 0 else 0.0


@dataclass(eq=False)
class RCChainState:
    open: np.ndarray
    boundary: str
    slice: graphs.FiniteGraphSlice = field(repr=False)
    sweeps: int = 0
    seed: int = 0

    def copy(self):
        return RCChainState(self.open.copy(), self.boundary, self.slice, self.sweeps, self.seed)


@dataclass
class DegreeCurve:
    q: float
    boundary: str
    p_grid: np.ndarray
    mean_degree: np.ndarray
    stderr: np.ndarray
    samples: int
    degree: float = 0.0

    def rows(self):
        for p, m, s in zip(self.p_grid, self.mean_degree, self.stderr):
            yield {"q": self.q, "boundary": self.boundary, "p": float(p), "mean_degree": float(m),
                   "stderr": float(s), "samples": self.samples}


@dataclass
class GapEstimate:
    gap: float
    stderr: float
    below: float
    above: float
    family: str
    radius: int
    q: float
    pc_est: float
    pu_est: float
    window: float

    def to_dict(self):
        return {"family": self.family, "radius": self.radius, "q": self.q, "pc_est": self.pc_est,
                "pu_est": self.pu_est, "window": self.window, "gap": self.gap, "stderr": self.stderr}


def chain_slice(slc, boundary):
    """Slice on which the chain runs: contracted for wired with a nonempty boundary."""
    if boundary == WIRED and len(slc.boundary_vertices) > 0:
        return graphs.contract_boundary(slc)
    return slc


def initial_state(slc, boundary=FREE, seed=0):
    return RCChainState(np.zeros(slc.edge_count, dtype=bool), boundary, chain_slice(slc, boundary), 0, seed)


def connected_off(slc, open_mask, edge):
    """Whether the endpoints of ``edge`` are joined by open edges other than itself."""
    t, h = (int(x) for x in slc.edges[edge])
    if t == h:
        return True
    indptr, nbr, eid = slc.adjacency()
    seen = {t}
    stack = [t]
    while stack:
        u = stack.pop()
        for k in range(indptr[u], indptr[u + 1]):
            if eid[k] == edge or not open_mask[eid[k]]:
                continue
            v = int(nbr[k])
            if v == h:
                return True
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def rc_step(state, params, edge, uniform):
    """One heat-bath update of ``edge``; returns a new state."""
    if not 0.0 <= uniform < 1.0:
        raise InvalidInput("uniform must lie in [0, 1)")
    if params.boundary != state.boundary:
        raise InvalidInput("boundary condition of state and params differ")
    accept = params.p if connected_off(state.slice, state.open, edge) else params.closed_branch()
    new = state.copy()
    new.open[edge] = uniform < accept
    return new


# ---------------------------------------------------------------------------
# compiled chain


@numba.njit(cache=True)
def _connected_off(t, h, skip, indptr, nbr, eid, open_mask, mark, stamp, qa, qb):
    """Alternating two-sided search; stops as soon as either side is exhausted."""
    if t == h:
        return True
    # mark[v] = stamp for side A, stamp + 1 for side B
    mark[t] = stamp
    mark[h] = stamp + 1
    qa[0] = t
    qb[0] = h
    ha, ta, hb, tb = 0, 1, 0, 1
    while ha < ta and hb < tb:
        if ta - ha <= tb - hb:
            u = qa[ha]
            ha += 1
            for k in range(indptr[u], indptr[u + 1]):
                e = eid[k]
                if e == skip or not open_mask[e]:
                    continue
                v = nbr[k]
                if mark[v] == stamp + 1:
                    return True
                if mark[v] != stamp:
                    mark[v] = stamp
                    qa[ta] = v
                    ta += 1
        else:
            u = qb[hb]
            hb += 1
            for k in range(indptr[u], indptr[u + 1]):
                e = eid[k]
                if e == skip or not open_mask[e]:
                    continue
                v = nbr[k]
                if mark[v] == stamp:
                    return True
                if mark[v] != stamp + 1:
                    mark[v] = stamp + 1
                    qb[tb] = v
                    tb += 1
    return False


@numba.njit(cache=True)
def _run_sweeps(tails, heads, indptr, nbr, eid, open_mask, uniforms, p, pc, mark, stamp0, qa, qb):
    M = tails.shape[0]
    stamp = stamp0
    n_sweeps = uniforms.shape[0] // M
    for s in range(n_sweeps):
        for e in range(M):
            u = uniforms[s * M + e]
            if _connected_off(tails[e], heads[e], e, indptr, nbr, eid, open_mask, mark, stamp, qa, qb):
                open_mask[e] = u < p
            else:
                open_mask[e] = u < pc
            stamp += 2
    return stamp


@numba.njit(cache=True)
def _record(tails, heads, indptr, nbr, eid, open_mask, uniforms, p, pc, mark, stamp, qa, qb, thinning, out):
    M = tails.shape[0]
    for j in range(out.shape[0]):
        chunk = uniforms[j * thinning * M:(j + 1) * thinning * M]
        stamp = _run_sweeps(tails, heads, indptr, nbr, eid, open_mask, chunk, p, pc, mark, stamp, qa, qb)
        out[j, :] = open_mask
    return stamp


class _Chain:
    def __init__(self, cslc, params, seed, replicate):
        self.slc = cslc
        self.params = params
        self.tails = cslc.edges[:, 0].copy()
        self.heads = cslc.edges[:, 1].copy()
        self.indptr, self.nbr, self.eid = (np.ascontiguousarray(a, dtype=np.int64) for a in cslc.adjacency())
        n = cslc.vertex_count
        self.mark = np.zeros(n, dtype=np.int64)
        self.qa = np.empty(n, dtype=np.int64)
        self.qb = np.empty(n, dtype=np.int64)
        self.stamp = 1
        self.open = np.zeros(cslc.edge_count, dtype=bool)
        self.gen = rng.generator(seed, rng.CHAIN, replicate)
        self.sweeps = 0

    def run(self, n_sweeps):
        M = len(self.tails)
        if M == 0 or n_sweeps <= 0:
            self.sweeps += max(n_sweeps, 0)
            return
        u = self.gen.random(M * n_sweeps)
        self.stamp = _run_sweeps(self.tails, self.heads, self.indptr, self.nbr, self.eid, self.open, u,
                                 self.params.p, self.params.closed_branch(), self.mark, self.stamp,
                                 self.qa, self.qb)
        self.sweeps += n_sweeps

    def record(self, n_samples, thinning):
        """Snapshots after every ``thinning`` sweeps, drawn in one compiled pass."""
        M = len(self.tails)
        out = np.zeros((n_samples, M), dtype=bool)
        if M:
            u = self.gen.random(M * thinning * n_samples)
            self.stamp = _record(self.tails, self.heads, self.indptr, self.nbr, self.eid, self.open, u,
                                 self.params.p, self.params.closed_branch(), self.mark, self.stamp,
                                 self.qa, self.qb, thinning, out)
        self.sweeps += thinning * n_samples
        return out


def rc_sample(slc, params, burn_in_sweeps=200, n_samples=100, thinning=5, seed=0, replicate=0):
    """Systematic-scan heat bath; returns ``n_samples`` snapshots taken every
    ``thinning`` sweeps after ``burn_in_sweeps``."""
    if burn_in_sweeps < 1 or n_samples < 1 or thinning < 1:
        raise InvalidInput("burn_in_sweeps, n_samples and thinning must be >= 1")
    chain = _Chain(chain_slice(slc, params.boundary), params, seed, replicate)
    chain.run(burn_in_sweeps)
    out = []
    for _ in range(n_samples):
        chain.run(thinning)
        out.append(RCChainState(chain.open.copy(), params.boundary, chain.slc, chain.sweeps, seed))
    return out


def sample_matrix(slc, params, burn_in_sweeps=200, n_samples=100, thinning=5, seed=0, replicate=0):
    """Snapshots stacked into an ``(n_samples, edge_count)`` boolean array.

    Draws the same chain as :func:`rc_sample` without per-snapshot overhead.
    """
    if burn_in_sweeps < 1 or n_samples < 1 or thinning < 1:
        raise InvalidInput("burn_in_sweeps, n_samples and thinning must be >= 1")
    chain = _Chain(chain_slice(slc, params.boundary), params, seed, replicate)
    chain.run(burn_in_sweeps)
    return chain.record(n_samples, thinning)


def batch_means(x, n_batches=20):
    """Mean and batch-means standard error of a (possibly correlated) series."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    b = min(n_batches, n)
    if b < 2:
        return float(x.mean()), float("nan")
    size = n // b
    means = x[: b * size].reshape(b, size).mean(axis=1)
    return float(x.mean()), float(means.std(ddof=1) / math.sqrt(b))


def marginal_stderr(samples, n_batches=50):
    """Per-edge means and batch-means standard errors from a sample matrix."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    size = n // n_batches
    means = samples[: n_batches * size].reshape(n_batches, size, -1).mean(axis=1)
    return samples.mean(axis=0), means.std(axis=0, ddof=1) / math.sqrt(n_batches)


# ---------------------------------------------------------------------------
# exact enumeration


def exact_marginals(slc, params, max_edges=20):
    """Per-edge open probabilities and expected base degree by enumeration.

    Weight of a configuration: p^|w| (1-p)^(|E|-|w|) q^k(w), clusters counted on
    the chain slice (boundary identified when wired).
    """
    cslc = chain_slice(slc, params.boundary)
    M, n = cslc.edge_count, cslc.vertex_count
    if M > max_edges:
        raise InvalidInput(f"enumeration limited to {max_edges} edges")
    configs = np.array(list(itertools.product((0, 1), repeat=M)), dtype=bool).reshape(-1, M)
    weights = np.empty(len(configs))
    p, q = params.p, params.q
    for i, w in enumerate(configs):
        k = n - _rank(n, cslc.edges[w])
        m = int(w.sum())
        weights[i] = (p ** m) * ((1 - p) ** (M - m)) * q ** k
    weights /= weights.sum()
    marg = weights @ configs
    return marg


def _rank(n, edges):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    r = 0
    for a, b in edges:
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[ra] = rb
            r += 1
    return r


# ---------------------------------------------------------------------------
# expected degree curves


def _degree_sites(slc, family, weights):
    """Orbit representatives with normalized weights (1/w_i)/T."""
    weights = weights or graphs.default_orbit_weights(family)
    reps = [slc.orbit_representative(i) for i in range(family.n_vertex_orbits)]
    w = np.array([1.0 / x for x in weights.stabilizer_weight]) / weights.normalizer
    return reps, w


def _point_task(args):
    slc, params, n_samples, burn_in, thinning, seed, replicate, reps, w = args
    chain = _Chain(chain_slice(slc, params.boundary), params, seed, replicate)
    inc = [slc.incident_edges(r) for r in reps]
    chain.run(burn_in)
    snaps = chain.record(n_samples, thinning)
    vals = sum(wi * snaps[:, e].sum(axis=1) for wi, e in zip(w, inc))
    return batch_means(vals)


def degree_curve(family, radius, q, boundary, p_grid, n_samples=400, seed=0, burn_in=200, thinning=5,
                 weights=None, jobs=1, budget=graphs.DEFAULT_BUDGET, slc=None):
    """Expected open degree of the base point per grid value, with batch-means errors.

    For quasi-transitive families the base point is drawn from the orbit
    representatives with the normalized stabilizer weights.
    """
    p_grid = np.asarray(p_grid, dtype=float)
    if np.any(np.diff(p_grid) < 0):
        raise InvalidInput("p_grid must be sorted")
    slc = slc or graphs.build_slice(family, radius, budget)
    reps, w = _degree_sites(slc, family, weights)
    tasks = [(slc, RCParams(float(p), q, boundary), n_samples, burn_in, thinning, seed, k, reps, w)
             for k, p in enumerate(p_grid)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            res = list(ex.map(_point_task, tasks))
    else:
        res = [_point_task(t) for t in tasks]
    mean = np.array([m for m, _ in res])
    se = np.array([s for _, s in res])
    return DegreeCurve(q, boundary, p_grid, mean, se, n_samples, graphs.effective_degree(family, weights))


def rc_gap(family, radius, q, thresholds, window=0.02, n_samples=400, seed=0, boundary=WIRED,
           burn_in=200, thinning=5, weights=None, jobs=1, budget=graphs.DEFAULT_BUDGET):
    """Half the jump of the expected degree across the nonuniqueness interval.

    The curve is evaluated at ``pc - window`` and ``pu + window`` (clipped to
    [0, 1]).
    """
    pc, pu = thresholds
    if not 0 < pc <= pu <= 1:
        raise InvalidInput("thresholds must satisfy 0 < pc <= pu <= 1")
    if window < 0:
        raise InvalidInput("window must be >= 0")
    lo, hi = max(0.0, pc - window), min(1.0, pu + window)
    if window == 0 and pc == pu:
        grid = [lo]
    else:
        grid = [lo, hi]
    curve = degree_curve(family, radius, q, boundary, grid, n_samples, seed, burn_in, thinning, weights, jobs,
                         budget)
    below, above = curve.mean_degree[0], curve.mean_degree[-1]
    se = 0.0 if len(grid) == 1 else 0.5 * math.hypot(curve.stderr[0], curve.stderr[-1])
    return GapEstimate(0.5 * (above - below), se, float(below), float(above), family.describe(), radius, q,
                       pc, pu, window)
