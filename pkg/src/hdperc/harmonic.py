"""Free and wired unit currents on exhaustion slices and the first l2 Betti number.

The projection coefficient of an edge onto the harmonic Dirichlet part of the
edge space is the limit of ``free current - wired current`` through that edge
along an exhaustion.  Free currents decrease and wired currents increase with
the radius, so every finite radius yields an upper bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import graphs
from .errors import ConsistencyError, InvalidInput, SolverError
from .numerics import DEFAULT_TOL, cg_solve, ground, laplacian


@dataclass
class Cochain1:
    """Real values on edges, stored for the canonical orientation of each edge."""

    values: np.ndarray

    def __getitem__(self, edge):
        return self.values[edge]

    def oriented(self, edge, tail, head, slc):
        t, h = slc.edges[edge]
        if (t, h) == (tail, head):
            return self.values[edge]
        if (t, h) == (head, tail):
            return -self.values[edge]
        raise InvalidInput("orientation does not match the edge")

    def norm(self):
        return float(np.linalg.norm(self.values))


def unit_currents(slc, edge_ids, ground_vertex=None, tolerance=DEFAULT_TOL, max_iterations=None):
    """Unit currents tail -> head for several edges with one grounded Laplacian.

    Returns an ``(edge_count, len(edge_ids))`` array; column ``j`` is the current
    cochain for ``edge_ids[j]``.
    """
    edge_ids = np.atleast_1d(np.asarray(edge_ids, dtype=np.int64))
    n = slc.vertex_count
    e = slc.edges
    if ground_vertex is None:
        ground_vertex = int(e[edge_ids[0], 1])
    rhs = np.zeros((n, len(edge_ids)))
    cols = np.arange(len(edge_ids))
    tails, heads = e[edge_ids, 0], e[edge_ids, 1]
    np.add.at(rhs, (tails, cols), 1.0)
    np.add.at(rhs, (heads, cols), -1.0)
    Lg, keep = ground(laplacian(slc), ground_vertex)
    report = cg_solve(Lg, rhs[keep], tolerance, max_iterations)
    if not report.converged:
        raise SolverError(report)
    phi = np.zeros((n, len(edge_ids)))
    phi[keep] = report.solution.reshape(-1, len(edge_ids))
    return phi[e[:, 0]] - phi[e[:, 1]]


def free_unit_current(slc, edge, tolerance=DEFAULT_TOL):
    """Unit current through ``edge`` with free boundary; its value on ``edge`` is
    the effective resistance between the endpoints."""
    if not 0 <= edge < slc.edge_count:
        raise InvalidInput(f"edge {edge} out of range")
    t, h = slc.edges[edge]
    if t == h:
        return Cochain1(np.zeros(slc.edge_count))
    return Cochain1(unit_currents(slc, [edge], int(h), tolerance)[:, 0])


def _check_interior(slc, edge_ids):
    bnd = slc.boundary_set
    for k in np.atleast_1d(edge_ids):
        t, h = slc.edges[k]
        if int(t) in bnd or int(h) in bnd:
            raise InvalidInput(f"edge {int(k)} touches the boundary")


def wired_unit_current(slc, edge, tolerance=DEFAULT_TOL):
    """Unit current through ``edge`` after identifying the boundary to one vertex."""
    if len(slc.boundary_vertices) == 0:
        return free_unit_current(slc, edge, tolerance)
    _check_interior(slc, [edge])
    wslc = graphs.contract_boundary(slc)
    return Cochain1(unit_currents(wslc, [edge], int(wslc.boundary_vertices[0]), tolerance)[:, 0])


@dataclass
class EdgeCoefficient:
    edge_orbit: int
    free_current: float
    wired_current: float
    coefficient: float
    radius: int
    edge_index: int = -1
    vertex_orbit: int = 0


def slice_coefficients(slc, edge_ids, tolerance=DEFAULT_TOL, ground_vertex=None):
    """Free and wired currents through each of ``edge_ids`` (batched solves)."""
    edge_ids = np.asarray(edge_ids, dtype=np.int64)
    if ground_vertex is None:
        ground_vertex = slc.base_vertex
    free = unit_currents(slc, edge_ids, ground_vertex, tolerance)[edge_ids, np.arange(len(edge_ids))]
    if len(slc.boundary_vertices) == 0:
        wired = free.copy()
    else:
        _check_interior(slc, edge_ids)
        wslc = graphs.contract_boundary(slc)
        # pinning the merged vertex removes its (very dense) row from the system
        g = int(wslc.boundary_vertices[0])
        wired = unit_currents(wslc, edge_ids, g, tolerance)[edge_ids, np.arange(len(edge_ids))]
    return free, wired


def edge_coefficient(family, edge_orbit, radius, tolerance=DEFAULT_TOL, budget=graphs.DEFAULT_BUDGET, slc=None):
    """Radius-``radius`` upper bound for the projection coefficient of an edge orbit.

    The representative is the lowest-index edge of that orbit at the base vertex.
    """
    if radius < 2:
        raise InvalidInput("edge coefficients need radius >= 2")
    slc = slc or graphs.build_slice(family, radius, budget)
    at_base = slc.incident_edges(slc.base_vertex)
    match = at_base[slc.edge_orbit[at_base] == edge_orbit]
    if len(match) == 0:
        raise InvalidInput(f"no edge of orbit {edge_orbit} at the base vertex")
    k = int(match[0])
    free, wired = slice_coefficients(slc, [k], tolerance)
    return EdgeCoefficient(edge_orbit, float(free[0]), float(wired[0]), float(free[0] - wired[0]), radius, k)


@dataclass
class Beta1Estimate:
    per_radius: list
    final_value: float
    converged: bool
    family: str
    orbit_weights: tuple
    rows: list = field(default_factory=list, repr=False)


def representative_edges(slc, n_orbits):
    """(vertex orbit, edge index) for every edge at each orbit representative."""
    out = []
    for i in range(n_orbits):
        rep = slc.orbit_representative(i)
        out += [(i, int(k)) for k in slc.incident_edges(rep)]
    return out


def upper_bound(coefs, orbit_of, weights):
    """(1/2T) * sum_i (1/w_i) * sum of coefficients at representative i."""
    total = 0.0
    for c, i in zip(coefs, orbit_of):
        total += c / weights.stabilizer_weight[i]
    return total / (2.0 * weights.normalizer)


def beta1_estimate(family, weights=None, radii=(4, 6, 8), tolerance=DEFAULT_TOL,
                   budget=graphs.DEFAULT_BUDGET, convergence_tol=1e-3, check_monotone=True):
    """Sequence of upper bounds for beta_1 along balls of the given radii."""
    radii = sorted(int(r) for r in radii)
    if not radii:
        raise InvalidInput("radii must be nonempty")
    weights = weights or graphs.default_orbit_weights(family)
    if len(weights) != family.n_vertex_orbits:
        raise InvalidInput("orbit weights do not match the family's orbit count")
    per_radius, rows = [], []
    for r in radii:
        slc = graphs.build_slice(family, r, budget)
        reps = representative_edges(slc, family.n_vertex_orbits)
        orbit_of = [i for i, _ in reps]
        ids = [k for _, k in reps]
        need = max(int(slc.distance[slc.orbit_representative(i)]) for i in set(orbit_of)) + 2
        if r < need:
            raise InvalidInput(f"radius {r} too small: need >= {need} so representative edges are interior")
        free, wired = slice_coefficients(slc, ids, tolerance)
        coef = free - wired
        ub = upper_bound(coef, orbit_of, weights)
        per_radius.append((r, ub))
        for i, k, f, w, c in zip(orbit_of, ids, free, wired, coef):
            rows.append({"radius": r, "orbit": i, "edge_index": k, "free_current": f,
                         "wired_current": w, "coefficient": c, "beta1_upper_bound": ub})
    ubs = [u for _, u in per_radius]
    rows.append({"radius": radii[-1], "orbit": -1, "edge_index": -1, "free_current": float("nan"),
                 "wired_current": float("nan"), "coefficient": float("nan"), "beta1_upper_bound": ubs[-1]})
    if check_monotone:
        for (r0, a), (r1, b) in zip(per_radius, per_radius[1:]):
            if b > a + 2 * tolerance * max(1.0, len(rows)):
                raise ConsistencyError(f"upper bound rose from {a!r} (r={r0}) to {b!r} (r={r1})")
    converged = len(ubs) >= 2 and ubs[-2] - ubs[-1] <= convergence_tol
    return Beta1Estimate(per_radius, ubs[-1], converged, family.describe(), weights.stabilizer_weight, rows)


def is_ohd(estimate, threshold=0.05):
    """Whether the estimate places the graph in O_HD; returns (flag, margin)."""
    margin = threshold - estimate.final_value
    return margin >= 0, margin
