"""Finite exhaustions (balls) of infinite transitive and quasi-transitive graphs."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import groups
from .errors import BudgetExceeded, InvalidInput

DEFAULT_BUDGET = 2_000_000

KINDS = ("lattice", "regular_tree", "biregular_tree", "cayley_free_group", "surface_group", "line")


@dataclass(frozen=True)
class GraphFamily:
    """An infinite graph named by its construction.

    ``params`` holds the integer parameters in a fixed order per kind:
    lattice ``(dim,)``, regular_tree ``(degree,)``, biregular_tree ``(r, s)``,
    cayley_free_group ``(rank,)`` plus ``words``, surface_group ``(genus,)``,
    line ``()``.
    """

    kind: str
    params: tuple = ()
    words: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown family kind {self.kind!r}")
        p = self.params
        if self.kind == "lattice" and (len(p) != 1 or p[0] < 1):
            raise InvalidInput("lattice needs dimension >= 1")
        if self.kind == "regular_tree" and (len(p) != 1 or p[0] < 2):
            raise InvalidInput("regular_tree needs degree >= 2")
        if self.kind == "biregular_tree" and (len(p) != 2 or min(p) < 2):
            raise InvalidInput("biregular_tree needs r, s >= 2")
        if self.kind == "surface_group" and (len(p) != 1 or p[0] < 2):
            raise InvalidInput("surface_group needs genus >= 2")
        if self.kind == "cayley_free_group":
            if len(p) != 1 or p[0] < 1:
                raise InvalidInput("cayley_free_group needs rank >= 1")
            if not self.words:
                object.__setattr__(self, "words", tuple("abcdefghijklmnopqrstuvwxyz"[i] for i in range(p[0])))
            self._free_generators()

    # constructors -----------------------------------------------------
    @classmethod
    def lattice(cls, dim):
        return cls("lattice", (int(dim),))

    @classmethod
    def regular_tree(cls, degree):
        return cls("regular_tree", (int(degree),))

    @classmethod
    def biregular_tree(cls, r, s):
        return cls("biregular_tree", (int(r), int(s)))

    @classmethod
    def free_group(cls, rank, words=()):
        return cls("cayley_free_group", (int(rank),), tuple(words))

    @classmethod
    def surface_group(cls, genus):
        return cls("surface_group", (int(genus),))

    @classmethod
    def line(cls):
        return cls("line")

    # properties -------------------------------------------------------
    def _free_generators(self):
        rank = self.params[0]
        alphabet = "abcdefghijklmnopqrstuvwxyz"[:rank]
        gens = [groups.parse_word(w, alphabet) for w in self.words]
        seen = set()
        for w, g in zip(self.words, gens):
            if not g:
                raise InvalidInput(f"generator {w!r} is trivial")
            if g in seen or groups.inverse(g) in seen:
                raise InvalidInput(f"generator {w!r} repeats another generator or its inverse")
            seen.add(g)
        # the words must generate F_rank: every basis letter must be reachable
        if not _generates_free_group(gens, rank):
            raise InvalidInput(f"words {self.words} do not generate the free group of rank {rank}")
        return gens

    @property
    def orbit_degrees(self):
        """Degree of each vertex orbit in the infinite graph."""
        k, p = self.kind, self.params
        if k == "lattice":
            return (2 * p[0],)
        if k == "line":
            return (2,)
        if k == "regular_tree":
            return (p[0],)
        if k == "biregular_tree":
            return (p[0], p[1])
        if k == "cayley_free_group":
            return (2 * len(self.words),)
        return (4 * p[0],)

    @property
    def degree(self):
        """Degree of the base vertex."""
        return self.orbit_degrees[0]

    @property
    def n_vertex_orbits(self):
        return len(self.orbit_degrees)

    @property
    def amenable(self):
        return self.kind in ("lattice", "line") or (self.kind == "regular_tree" and self.params[0] == 2)

    @property
    def is_tree(self):
        # rank-many generators of F_rank form a basis (free groups are Hopfian)
        if self.kind == "cayley_free_group":
            return len(self.words) == self.params[0]
        return self.kind in ("regular_tree", "biregular_tree", "line") or self.params == (1,) and self.kind == "lattice"

    def describe(self):
        k, p = self.kind, self.params
        if k == "lattice":
            return f"lattice(dim={p[0]})"
        if k == "regular_tree":
            return f"regular_tree(degree={p[0]})"
        if k == "biregular_tree":
            return f"biregular_tree(r={p[0]},s={p[1]})"
        if k == "cayley_free_group":
            return f"cayley_free_group(rank={p[0]},gens={'/'.join(self.words)})"
        if k == "surface_group":
            return f"surface_group(genus={p[0]})"
        return "line"


def _generates_free_group(gens, rank):
    # Stallings folding would be the general test; the BFS below suffices for
    # short generating sets: closure of letters reachable by products of length <= 3.
    elems = {()}
    frontier = {()}
    letters = list(gens) + [groups.inverse(g) for g in gens]
    for _ in range(3):
        frontier = {groups.multiply(u, g) for u in frontier for g in letters} - elems
        elems |= frontier
    return all((k,) in elems for k in range(1, rank + 1))


@dataclass(frozen=True)
class OrbitWeights:
    stabilizer_weight: tuple
    normalizer: float = field(init=False)

    def __post_init__(self):
        w = tuple(float(x) for x in self.stabilizer_weight)
        if not w or any(x <= 0 for x in w):
            raise InvalidInput("orbit weights must be positive")
        object.__setattr__(self, "stabilizer_weight", w)
        object.__setattr__(self, "normalizer", float(sum(Fraction(x).limit_denominator(10**9) ** -1 for x in w)))

    def __len__(self):
        return len(self.stabilizer_weight)


def default_orbit_weights(family: GraphFamily) -> OrbitWeights:
    if family.kind == "biregular_tree":
        r, s = family.params
        return OrbitWeights((r, s))
    return OrbitWeights((1,))


def effective_degree(family, weights=None):
    """Weighted mean degree (1/T) sum_i deg_i / w_i; equals deg for transitive graphs."""
    weights = weights or default_orbit_weights(family)
    degs = family.orbit_degrees
    if len(degs) != len(weights):
        raise InvalidInput("orbit weights do not match the family's orbit count")
    return sum(d / w for d, w in zip(degs, weights.stabilizer_weight)) / weights.normalizer


@dataclass(frozen=True, eq=False)
class FiniteGraphSlice:
    """A finite (multi)graph with a base vertex and marked boundary.

    ``edges[k] = (tail, head)``.  Balls have ``tail < head``; graphs produced by
    :func:`contract_boundary` keep the parent orientation and may hold loops
    and parallel edges.
    """

    vertex_count: int
    edges: np.ndarray
    base_vertex: int
    boundary_vertices: np.ndarray
    vertex_orbit: np.ndarray
    edge_orbit: np.ndarray
    radius: int
    distance: np.ndarray | None = None
    family: GraphFamily | None = None
    contracted: bool = False
    parent_edges: np.ndarray | None = None

    def __post_init__(self):
        for name in ("edges", "boundary_vertices", "vertex_orbit", "edge_orbit", "distance", "parent_edges"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.ascontiguousarray(arr, dtype=np.int64)
                if name == "edges":
                    arr = arr.reshape(-1, 2)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def edge_count(self):
        return len(self.edges)

    @property
    def boundary_set(self):
        return frozenset(self.boundary_vertices.tolist())

    def interior_mask(self):
        mask = np.ones(self.vertex_count, dtype=bool)
        mask[self.boundary_vertices] = False
        return mask

    def degrees(self):
        deg = np.zeros(self.vertex_count, dtype=np.int64)
        e = self.edges[self.edges[:, 0] != self.edges[:, 1]]
        np.add.at(deg, e[:, 0], 1)
        np.add.at(deg, e[:, 1], 1)
        return deg

    def incident_edges(self, v):
        """Indices of edges touching ``v``, in increasing order."""
        return np.flatnonzero((self.edges[:, 0] == v) | (self.edges[:, 1] == v))

    def orbit_representative(self, orbit):
        ids = np.flatnonzero(self.vertex_orbit == orbit)
        if len(ids) == 0:
            raise InvalidInput(f"no vertex of orbit {orbit} in slice")
        return int(ids[0])

    def adjacency(self):
        """CSR-style adjacency: (indptr, neighbours, edge ids), loops dropped."""
        e = self.edges
        keep = e[:, 0] != e[:, 1]
        ids = np.flatnonzero(keep)
        src = np.concatenate([e[keep, 0], e[keep, 1]])
        dst = np.concatenate([e[keep, 1], e[keep, 0]])
        eid = np.concatenate([ids, ids])
        order = np.lexsort((eid, src))
        src, dst, eid = src[order], dst[order], eid[order]
        indptr = np.zeros(self.vertex_count + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        return np.cumsum(indptr), dst, eid


# ---------------------------------------------------------------------------
# ball construction


def ball_size(family, radius):
    """Number of vertices in the ball, closed form where one exists, else None."""
    k, p = family.kind, family.params
    if k == "regular_tree":
        d = p[0]
        if d == 2:
            return 2 * radius + 1
        return 1 + d * ((d - 1) ** radius - 1) // (d - 2)
    if k == "biregular_tree":
        r, s = p
        total, level, deg_next = 1, 1, r
        for depth in range(1, radius + 1):
            level *= deg_next if depth == 1 else deg_next - 1
            total += level
            deg_next = s if depth % 2 == 1 else r
        return total
    if k == "line":
        return 2 * radius + 1
    if k == "lattice":
        from math import comb

        d = p[0]
        return sum(2 ** i * comb(d, i) * comb(radius, i) for i in range(d + 1))
    return None


def build_slice(family: GraphFamily, radius: int, budget: int = DEFAULT_BUDGET) -> FiniteGraphSlice:
    """Graph-metric ball of ``radius`` around the base vertex, numbered breadth first."""
    if radius < 0:
        raise InvalidInput("radius must be nonnegative")
    size = ball_size(family, radius)
    if size is not None and size > budget:
        raise BudgetExceeded(budget, size)
    if family.kind in ("regular_tree", "biregular_tree"):
        return _tree_ball(family, radius)
    if family.kind in ("lattice", "line"):
        dim = 1 if family.kind == "line" else family.params[0]
        moves = []
        for i in range(dim):
            for sgn in (1, -1):
                step = [0] * dim
                step[i] = sgn
                moves.append((tuple(step), i))

        def neighbours(v):
            for step, orb in moves:
                yield tuple(a + b for a, b in zip(v, step)), orb

        return _bfs_ball(family, radius, (0,) * dim, neighbours, lambda v: v, budget)
    if family.kind == "cayley_free_group":
        gens = family._free_generators()
        letters = []
        for j, g in enumerate(gens):
            letters.append((g, j))
            letters.append((groups.inverse(g), j))

        def neighbours(w):
            for g, orb in letters:
                yield groups.multiply(w, g), orb

        return _bfs_ball(family, radius, (), neighbours, lambda w: w, budget)
    return _surface_ball(family, radius, budget)


def _bfs_ball(family, radius, origin, neighbours, key, budget):
    ids = {key(origin): 0}
    states = [origin]
    dist = [0]
    edges = []
    eorb = []
    head = 0
    while head < len(states):
        u = states[head]
        du = dist[head]
        for v, orb in neighbours(u):
            kv = key(v)
            j = ids.get(kv)
            if j is None:
                if du == radius:
                    continue
                j = len(states)
                if j >= budget:
                    raise BudgetExceeded(budget)
                ids[kv] = j
                states.append(v)
                dist.append(du + 1)
            if j > head:
                edges.append((head, j))
                eorb.append(orb)
        head += 1
    return _finish(family, radius, len(states), edges, eorb, np.array(dist), np.zeros(len(states), dtype=np.int64))


def _finish(family, radius, n, edges, eorb, dist, vorb):
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    boundary = np.flatnonzero(dist == radius)
    return FiniteGraphSlice(
        vertex_count=n,
        edges=edges,
        base_vertex=0,
        boundary_vertices=boundary,
        vertex_orbit=vorb,
        edge_orbit=np.asarray(eorb, dtype=np.int64),
        radius=radius,
        distance=dist,
        family=family,
    )


def _tree_ball(family, radius):
    if family.kind == "regular_tree":
        r = s = family.params[0]
    else:
        r, s = family.params
    degs = (r, s)
    parents = [np.zeros(0, dtype=np.int64)]
    level = np.array([0], dtype=np.int64)
    n = 1
    dist = [np.zeros(1, dtype=np.int64)]
    vorb = [np.zeros(1, dtype=np.int64)]
    edge_parts = []
    for depth in range(1, radius + 1):
        orb_parent = (depth - 1) % 2
        kids = degs[orb_parent] - (0 if depth == 1 else 1)
        child_ids = n + np.arange(len(level) * kids, dtype=np.int64)
        par = np.repeat(level, kids)
        edge_parts.append(np.stack([par, child_ids], axis=1))
        n += len(child_ids)
        level = child_ids
        dist.append(np.full(len(child_ids), depth, dtype=np.int64))
        vorb.append(np.full(len(child_ids), depth % 2 if family.kind == "biregular_tree" else 0, dtype=np.int64))
    edges = np.concatenate(edge_parts) if edge_parts else np.zeros((0, 2), dtype=np.int64)
    return _finish(family, radius, n, edges, np.zeros(len(edges), dtype=np.int64),
                   np.concatenate(dist), np.concatenate(vorb))


_SURFACE_REPS = {}


def _surface_ball(family, radius, budget):
    genus = family.params[0]
    grp = groups.SurfaceGroup(genus)
    if genus not in _SURFACE_REPS:
        _SURFACE_REPS[genus] = [groups.surface_representation(genus, seed) for seed in (11, 23)]
    reps = _SURFACE_REPS[genus]
    letters = []
    for j, g in enumerate(grp.generators):
        letters.append((g, j))
        letters.append((-g, j))

    words = [()]
    images = [tuple((1, 0, 0, 1) for _ in reps)]
    buckets = {images[0]: [0]}
    dist = [0]
    edges, eorb = [], []
    head = 0
    while head < len(words):
        w, img, du = words[head], images[head], dist[head]
        for g, orb in letters:
            nimg = tuple(groups._mat_mul(m, rep[g]) for m, rep in zip(img, reps))
            nw = groups.multiply(w, (g,))
            j = None
            for cand in buckets.get(nimg, ()):
                if grp.equal(nw, words[cand]):
                    j = cand
                    break
            if j is None:
                if du == radius:
                    continue
                j = len(words)
                if j >= budget:
                    raise BudgetExceeded(budget)
                words.append(nw)
                images.append(nimg)
                dist.append(du + 1)
                buckets.setdefault(nimg, []).append(j)
            if j > head:
                edges.append((head, j))
                eorb.append(orb)
        head += 1
    return _finish(family, radius, len(words), edges, eorb, np.array(dist), np.zeros(len(words), dtype=np.int64))


def max_radius_within_budget(family, budget=DEFAULT_BUDGET, cap=200):
    """Largest radius whose ball fits in ``budget`` vertices."""
    r = 0
    while r < cap:
        size = ball_size(family, r + 1)
        if size is None:
            try:
                size = build_slice(family, r + 1, budget).vertex_count
            except BudgetExceeded:
                break
        if size > budget:
            break
        r += 1
    return r


# ---------------------------------------------------------------------------


def contract_boundary(slc: FiniteGraphSlice) -> FiniteGraphSlice:
    """Identify every boundary vertex with a single new vertex (wired boundary).

    Non-boundary vertices keep their relative order; the merged vertex comes
    last.  Edge ``k`` of the result is edge ``k`` of the input with the same
    orientation, so cochains transfer without sign changes.
    """
    bnd = slc.boundary_vertices
    if len(bnd) == 0:
        raise InvalidInput("cannot contract an empty boundary")
    interior = slc.interior_mask()
    n_int = int(interior.sum())
    new_id = np.full(slc.vertex_count, n_int, dtype=np.int64)
    new_id[interior] = np.arange(n_int)
    edges = new_id[slc.edges]
    vorb = np.append(slc.vertex_orbit[interior], slc.vertex_orbit[bnd[0]])
    dist = None
    if slc.distance is not None:
        dist = np.append(slc.distance[interior], slc.distance[bnd].min())
    base = int(new_id[slc.base_vertex])
    return FiniteGraphSlice(
        vertex_count=n_int + 1,
        edges=edges,
        base_vertex=base,
        boundary_vertices=np.array([n_int]),
        vertex_orbit=vorb,
        edge_orbit=slc.edge_orbit,
        radius=slc.radius,
        distance=dist,
        family=slc.family,
        contracted=True,
        parent_edges=np.arange(slc.edge_count),
    )


def from_edges(n, edges, boundary=(), base=0, radius=0, edge_orbit=None, vertex_orbit=None):
    """Wrap a hand-made edge list as a slice (used for small test graphs)."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return FiniteGraphSlice(
        vertex_count=int(n),
        edges=edges,
        base_vertex=int(base),
        boundary_vertices=np.array(sorted(boundary), dtype=np.int64),
        vertex_orbit=np.zeros(n, dtype=np.int64) if vertex_orbit is None else vertex_orbit,
        edge_orbit=np.zeros(len(edges), dtype=np.int64) if edge_orbit is None else edge_orbit,
        radius=radius,
    )


# ---------------------------------------------------------------------------
# edge-list export


def export_slice(slc: FiniteGraphSlice) -> str:
    lines = [f"#vertices {slc.vertex_count} #edges {slc.edge_count} base {slc.base_vertex} radius {slc.radius}"]
    lines += [f"{t} {h} {o}" for (t, h), o in zip(slc.edges.tolist(), slc.edge_orbit.tolist())]
    lines.append("#boundary " + " ".join(str(v) for v in slc.boundary_vertices.tolist()))
    return "\n".join(lines) + "\n"


def write_slice(slc, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(export_slice(slc))


def parse_slice(text: str) -> FiniteGraphSlice:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "#vertices" or head[2] != "#edges":
        raise InvalidInput("missing slice header")
    n, m, base, radius = int(head[1]), int(head[3]), int(head[5]), int(head[7])
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    if len(body) != m:
        raise InvalidInput(f"header announces {m} edges, found {len(body)}")
    triples = np.array([[int(x) for x in ln.split()] for ln in body], dtype=np.int64).reshape(-1, 3)
    bline = next((ln for ln in lines if ln.startswith("#boundary")), "#boundary")
    boundary = [int(x) for x in bline.split()[1:]]
    return from_edges(n, triples[:, :2], boundary, base, radius, edge_orbit=triples[:, 2])
