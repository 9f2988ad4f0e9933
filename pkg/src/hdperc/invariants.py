"""Cross-module checks: threshold inequalities, cluster Betti numbers, cost,
and the mass-transport identity on tori."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import graphs, harmonic, percolation, rng
from .errors import InvalidInput

Z95 = 1.959963984540054


@dataclass
class InequalityReport:
    name: str
    family: str
    lhs: float
    rhs: float
    uncertainty: float
    inputs: dict = field(default_factory=dict)
    notes: str = ""

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def holds(self):
        return self.lhs <= self.rhs + self.uncertainty

    def to_dict(self):
        return {"name": self.name, "family": self.family, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack,
                "holds": self.holds, "inputs": dict(self.inputs, uncertainty=self.uncertainty), "notes": self.notes}


def _same_family(family, *tags):
    want = family.describe()
    for t in tags:
        if t != want:
            raise InvalidInput(f"estimate for {t} does not match {want}")


def check_cor43(family, beta1, pc, pu, weights=None):
    """beta_1 <= deg/2 * (p_u - p_c), with the thresholds' CI half-widths propagated."""
    _same_family(family, beta1.family, pc.family, pu.family)
    deg = graphs.effective_degree(family, weights)
    rhs = 0.5 * deg * (pu.value - pc.value)
    unc = 0.5 * deg * (pc.half_width() + pu.half_width())
    notes = "finite-volume consistency check"
    if pu.heuristic:
        notes += "; p_u is a heuristic estimate"
    if not pu.reached:
        notes += "; uniqueness not reached below p = 1"
    return InequalityReport("cor43", family.describe(), beta1.final_value, rhs, unc, {
        "beta1": beta1.final_value, "beta1_converged": beta1.converged, "degree": deg,
        "pc": pc.value, "pc_ci": [pc.ci_low, pc.ci_high], "pu": pu.value, "pu_ci": [pu.ci_low, pu.ci_high],
    }, notes)


def check_cor46(family, beta1, gap):
    """beta_1 <= random-cluster gap proxy, with a 95% normal error on the gap."""
    _same_family(family, beta1.family, gap.family)
    unc = Z95 * gap.stderr
    notes = f"q = {gap.q}; finite-volume gap proxy"
    rep = InequalityReport("cor46", family.describe(), beta1.final_value, gap.gap, unc, {
        "beta1": beta1.final_value, "gap": gap.gap, "gap_stderr": gap.stderr, "q": gap.q,
        "pc_est": gap.pc_est, "pu_est": gap.pu_est, "window": gap.window,
    }, notes)
    if not rep.holds and (gap.window == 0 or gap.pc_est == gap.pu_est):
        rep.notes += "; degenerate evaluation window (finite-volume artifact)"
    return rep


# ---------------------------------------------------------------------------


@dataclass
class ClusterBeta1Sample:
    seed: int
    p: float
    coefficient_sum: float
    cluster_class: str
    cluster_size: int


@dataclass
class ClusterBeta1Summary:
    family: str
    p: float
    truncation_radius: int
    samples: list

    def _cls(self, name):
        return np.array([s.coefficient_sum for s in self.samples if s.cluster_class == name])

    def mean(self, name):
        x = self._cls(name)
        return float(0.5 * x.mean()) if x.size else float("nan")

    def stderr(self, name):
        x = self._cls(name)
        return float(0.5 * x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else float("nan")

    def count(self, name):
        return int(self._cls(name).size)

    def to_dict(self):
        return {"family": self.family, "p": self.p, "truncation_radius": self.truncation_radius,
                **{f"{c}_{k}": getattr(self, k)(c) for c in ("finite", "boundary") for k in ("mean", "stderr", "count")}}


def cluster_coefficients(cluster, tolerance=1e-10):
    """Free minus wired current for each cluster edge at the cluster's base vertex."""
    ids = cluster.incident_edges(cluster.base_vertex)
    if len(ids) == 0:
        return np.zeros(0)
    free, wired = harmonic.slice_coefficients(cluster, ids, tolerance)
    return free - wired


def cluster_beta1(family, p, truncation_radius, seeds, tolerance=1e-10, budget=graphs.DEFAULT_BUDGET):
    """Monte Carlo estimate of half the coefficient sum at the base vertex of its
    open cluster, split into finite and boundary-reaching clusters."""
    if truncation_radius < 2:
        raise InvalidInput("truncation_radius must be >= 2")
    if not 0 <= p <= 1:
        raise InvalidInput("p must lie in [0, 1]")
    slc = graphs.build_slice(family, truncation_radius, budget)
    out = []
    for s in seeds:
        cl = percolation.origin_cluster(percolation.sample_labels(slc, int(s)), p)
        coef = cluster_coefficients(cl, tolerance)
        cls = "boundary" if len(cl.boundary_vertices) else "finite"
        out.append(ClusterBeta1Sample(int(s), p, float(coef.sum()), cls, cl.vertex_count))
    return ClusterBeta1Summary(family.describe(), p, truncation_radius, out)


# ---------------------------------------------------------------------------


@dataclass
class CostReport:
    family: str
    p: float
    cost: float
    beta1_bound: float | None
    relation: str
    holds: bool | None
    treeing_equality: bool | None

    def to_dict(self):
        return dict(self.__dict__)


def cost_report(family, p, beta1=None, tolerance=0.01, weights=None):
    """Cost of the Bernoulli(p) cluster graphing, ½·deg·p, against beta_1.

    At p = 1 the graphing generates the full orbit relation, so
    ``beta1 <= cost - 1`` applies, with equality when the graph is a tree.
    ``beta1`` is a :class:`harmonic.Beta1Estimate` or a number.
    """
    if not 0 <= p <= 1:
        raise InvalidInput("p must lie in [0, 1]")
    cost = 0.5 * percolation.expected_degree(family, p, weights)
    b = getattr(beta1, "final_value", beta1)
    if p < 1 or b is None:
        return CostReport(family.describe(), p, cost, b, "comparison applies at p = 1 only", None, None)
    holds = b <= cost - 1 + tolerance
    eq = None
    rel = "beta1 <= cost - 1"
    if family.is_tree:
        eq = abs(b - (cost - 1)) <= tolerance * max(1.0, abs(cost - 1))
        rel = "treeing: beta1 = cost - 1"
    return CostReport(family.describe(), p, cost, b, rel, holds, eq)


# ---------------------------------------------------------------------------


@dataclass
class MassTransportReport:
    sent: float
    received: float
    difference: float

    def to_dict(self):
        return dict(self.__dict__)


def torus_points(shape):
    return np.array(np.unravel_index(np.arange(int(np.prod(shape))), shape)).T


def verify_mass_transport(shape, transport, spot_checks=64, seed=0, rtol=1e-12):
    """Compare mass sent out of the origin with mass received there on the torus
    Z/shape[0] x ... ; ``transport(u, v)`` takes coordinate arrays."""
    shape = tuple(int(s) for s in shape)
    pts = torus_points(shape)
    o = np.zeros(len(shape), dtype=np.int64)
    g = rng.generator(seed, rng.DIRECT)
    mod = np.array(shape)
    for _ in range(spot_checks):
        u, v, t = (pts[i] for i in g.integers(0, len(pts), 3))
        a = transport(u, v)
        b = transport((u + t) % mod, (v + t) % mod)
        if a < 0 or abs(a - b) > rtol * max(1.0, abs(a)):
            raise InvalidInput("transport is not a nonnegative translation-invariant function")
    sent = math.fsum(transport(o, v) for v in pts)
    received = math.fsum(transport(v, o) for v in pts)
    return MassTransportReport(sent, received, abs(sent - received))


def adjacency_transport(shape):
    mod = np.array(shape)

    def f(u, v):
        d = (np.asarray(v) - np.asarray(u)) % mod
        d = np.minimum(d, mod - d)
        return float(d.sum() == 1)
    return f


def equality_transport(shape):
    mod = np.array(shape)
    return lambda u, v: float(np.all((np.asarray(u) - np.asarray(v)) % mod == 0))


def averaged_transport(shape, seed=0):
    """Group average of a random nonnegative kernel K: f(u, v) = mean_g K(u+g, v+g).

    The average only depends on v - u, so it is tabulated by difference.
    """
    shape = tuple(shape)
    n = int(np.prod(shape))
    K = rng.generator(seed, rng.DIRECT).random((n, n))
    pts = torus_points(shape)
    mod = np.array(shape)
    idx = lambda x: int(np.ravel_multi_index(tuple(np.asarray(x) % mod), shape))
    table = np.empty(n)
    for j, d in enumerate(pts):
        shifted = np.ravel_multi_index(tuple(((pts + d) % mod).T), shape)
        table[j] = math.fsum(K[np.arange(n), shifted]) / n

    def f(u, v):
        return float(table[idx(np.asarray(v) - np.asarray(u))])
    return f
