"""Reference Union-Find decoder: growth, spanning forest, peeling.

All iteration orders are fixed (ascending vertex ids, W/E/N/S/D/U edge
order, LIFO fusion stack) so this module is a bit-exact oracle for the
hardware pipeline model in `microarch`.

Growth policy: every odd, non-boundary cluster grows all of its incident
half-edges by one increment per pass; edges reaching the fully-grown
state are queued and merged after the pass. A cluster freezes as soon as
a grown edge reaches a virtual boundary vertex.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import DecodingGraph, logical_crossing_parity, syndrome_indices_of_edges
from .noise import ErrorPattern, Syndrome

LEFT_SIDE = 1
RIGHT_SIDE = 2

# hardware tree-traversal register file holds this many vertices per find
FIND_COMPRESSION_CAP = 5


class InvariantViolation(RuntimeError):
    """A decoder-internal invariant was broken (decoder bug)."""


def _vertex_adjacency(graph: DecodingGraph) -> list[tuple[tuple[int, int], ...]]:
    """Per-vertex ((edge, far), ...) tuples in fixed direction order."""
    out = []
    for v in range(graph.n_internal):
        pairs = []
        for k in range(6):
            e = graph.adj_edges[v, k]
            if e >= 0:
                pairs.append((int(e), int(graph.adj_verts[v, k])))
        out.append(tuple(pairs))
    return out


_ADJ_CACHE: dict[int, list] = {}


def _adjacency(graph: DecodingGraph):
    key = id(graph)
    adj = _ADJ_CACHE.get(key)
    if adj is None:
        adj = _vertex_adjacency(graph)
        _ADJ_CACHE[key] = adj
    return adj


class ClusterSet:
    """Union-find partition with per-root size, parity, boundary flag and
    growth count, plus the half-edge growth counters.

    State is reusable across decodes: `reset()` restores only the entries
    touched by the previous run.
    """

    def __init__(self, graph: DecodingGraph):
        self.graph = graph
        n = graph.n_internal
        self._adj = _adjacency(graph)
        self._eu = graph.edges_u.tolist()
        self._ev = graph.edges_v.tolist()
        self.parent = list(range(n))
        self.size = [1] * n
        self.parity = bytearray(n)
        self.boundary_sides = bytearray(n)
        self.growth_steps = [0] * n
        self.member = bytearray(n)
        self.edge_state = bytearray(graph.n_edges)
        self.members: dict[int, list[int]] = {}
        self.min_vertex: dict[int, int] = {}
        self.roots: set[int] = set()
        self.passes = 0
        self._touched_v: list[int] = []
        self._touched_e: list[int] = []

    def reset(self) -> None:
        parent, size, parity = self.parent, self.size, self.parity
        bnd, gst, mem = self.boundary_sides, self.growth_steps, self.member
        for v in self._touched_v:
            parent[v] = v
            size[v] = 1
            parity[v] = 0
            bnd[v] = 0
            gst[v] = 0
            mem[v] = 0
        estate = self.edge_state
        for e in self._touched_e:
            estate[e] = 0
        self._touched_v.clear()
        self._touched_e.clear()
        self.members.clear()
        self.min_vertex.clear()
        self.roots.clear()
        self.passes = 0

    # -- core union-find ------------------------------------------------

    def find(self, v: int) -> int:
        """Root of v's cluster; repoints at most the last 5 visited vertices."""
        parent = self.parent
        path = []
        r = v
        while True:
            p = parent[r]
            if p == r:
                break
            path.append(r)
            r = p
        for x in path[-FIND_COMPRESSION_CAP:]:
            parent[x] = r
        return r

    def union(self, u: int, v: int) -> int:
        """Merge the clusters of u and v; returns the surviving root.

        Weighted by vertex count; on a size tie the smaller root id wins.
        Parity XORs, boundary flags OR, growth counts take the max.
        """
        ru, rv = self.find(u), self.find(v)
        if ru == rv:
            return ru
        su, sv = self.size[ru], self.size[rv]
        if sv > su or (sv == su and rv < ru):
            ru, rv = rv, ru
        # ru survives
        self.parent[rv] = ru
        self.size[ru] += self.size[rv]
        self.parity[ru] ^= self.parity[rv]
        self.boundary_sides[ru] |= self.boundary_sides[rv]
        if self.growth_steps[rv] > self.growth_steps[ru]:
            self.growth_steps[ru] = self.growth_steps[rv]
        mu = self.members.get(ru)
        mv = self.members.get(rv)
        if mu is not None or mv is not None:
            if mu is None:
                mu = self.members[ru] = [ru]
            if mv is None:
                mv = [rv]
            else:
                del self.members[rv]
            mu.extend(mv)
            a = self.min_vertex.pop(rv, rv)
            b = self.min_vertex.get(ru, ru)
            self.min_vertex[ru] = a if a < b else b
        self.roots.discard(rv)
        self.roots.add(ru)
        return ru

    def touches_boundary(self, r: int) -> bool:
        return self.boundary_sides[r] != 0

    def signature(self) -> frozenset:
        """Canonical cluster-set value for engine-equivalence checks.

        Captures the partition plus every per-cluster attribute (size,
        parity, boundary sides, growth count). Parent forests are an
        implementation detail and deliberately excluded.
        """
        out = []
        for r in self.roots:
            out.append((
                tuple(sorted(self.members[r])),
                self.size[r],
                self.parity[r],
                self.boundary_sides[r],
                self.growth_steps[r],
            ))
        return frozenset(out)

    def members_of(self, r: int) -> list[int]:
        return self.members[r]

    def sorted_roots(self) -> list[int]:
        """Cluster roots ordered by smallest member vertex id."""
        mv = self.min_vertex
        return sorted(self.roots, key=lambda r: mv[r])

    # -- growth ----------------------------------------------------------

    def seed_defects(self, defects) -> None:
        member, parity = self.member, self.parity
        for v in defects:
            v = int(v)
            member[v] = 1
            parity[v] = 1
            self.members[v] = [v]
            self.min_vertex[v] = v
            self.roots.add(v)
            self._touched_v.append(v)

    def _ensure_member(self, v: int) -> None:
        if not self.member[v]:
            self.member[v] = 1
            self.members[v] = [v]
            self.min_vertex[v] = v
            self.roots.add(v)
            self._touched_v.append(v)

    def grow(self) -> None:
        """Run growth passes until every cluster is even or frozen."""
        adj = self._adj
        estate = self.edge_state
        eu, ev = self._eu, self._ev
        n_int = self.graph.n_internal
        parity, bnd = self.parity, self.boundary_sides
        touched_e = self._touched_e
        left = self.graph.left
        while True:
            grow_roots = [r for r in self.roots if parity[r] and not bnd[r]]
            if not grow_roots:
                return
            self.passes += 1
            gst = self.growth_steps
            for r in grow_roots:
                gst[r] += 1
            scan = []
            for r in grow_roots:
                scan.extend(self.members[r])
            scan.sort()
            fes = []
            for v in scan:
                for e, _w in adj[v]:
                    s = estate[e]
                    if s >= 2:
                        continue
                    if s == 0:
                        estate[e] = 1
                        touched_e.append(e)
                    else:
                        estate[e] = 2
                        fes.append(e)
            # fusion edge stack drains last-in first-out
            for i in range(len(fes) - 1, -1, -1):
                e = fes[i]
                u, w = eu[e], ev[e]
                if w >= n_int:
                    bnd[self.find(u)] |= LEFT_SIDE if w == left else RIGHT_SIDE
                else:
                    self._ensure_member(u)
                    self._ensure_member(w)
                    self.union(u, w)


@dataclass
class ClusterTree:
    """Spanning tree of one cluster: edges in DFS visit order.

    Each entry is (edge_id, leafward_vertex, rootward_vertex). For a
    boundary-touching cluster the traversal starts at the virtual vertex
    and the tree has exactly size(cluster) edges; otherwise size - 1.
    """

    root: int
    start_vertex: int
    edges: list[tuple[int, int, int]]
    n_vertices: int
    boundary: bool


@dataclass
class SpanningForest:
    trees: list[ClusterTree] = field(default_factory=list)


@dataclass
class Correction:
    edge_ids: np.ndarray

    @property
    def weight(self) -> int:
        return int(self.edge_ids.size)

    def as_set(self) -> frozenset:
        return frozenset(int(e) for e in self.edge_ids)


@dataclass
class DecodeStats:
    """Per-decode cluster statistics, ordered by smallest member vertex."""

    m: int
    sizes: tuple
    growth_steps: tuple
    boundary: tuple
    tree_edges: tuple
    passes: int


@dataclass
class DecodeOutcome:
    success: bool
    residual_logical: int
    stats: DecodeStats | None = None


def grow_clusters(graph: DecodingGraph, syn: Syndrome) -> ClusterSet:
    cs = ClusterSet(graph)
    cs.seed_defects(syn.defects)
    cs.grow()
    return cs


def spanning_forest(graph: DecodingGraph, cs: ClusterSet) -> SpanningForest:
    """DFS spanning tree per cluster over fully grown edges.

    Traversal root is the smallest vertex id of the cluster; for a
    boundary-touching cluster the virtual boundary vertex is the entry
    point (LEFT preferred when both sides are touched). Half-grown edges
    are ignored.
    """
    adj = _adjacency(graph)
    estate = cs.edge_state
    n_int = graph.n_internal
    forest = SpanningForest()
    for root in cs.sorted_roots():
        if cs.parity[root] and not cs.boundary_sides[root]:
            raise InvariantViolation(f"cluster at root {root} is odd and not on a boundary")
        edges: list[tuple[int, int, int]] = []
        visited = set()

        def descend(v0: int) -> None:
            frames = [(v0, 0)]
            while frames:
                x, k = frames[-1]
                pairs = adj[x]
                if k == len(pairs):
                    frames.pop()
                    continue
                frames[-1] = (x, k + 1)
                e, w = pairs[k]
                if estate[e] != 2 or w >= n_int or w in visited:
                    continue
                visited.add(w)
                edges.append((e, w, x))
                frames.append((w, 0))

        sides = cs.boundary_sides[root]
        if sides:
            virt = graph.left if sides & LEFT_SIDE else graph.right
            entry_edges = graph.left_edges if virt == graph.left else graph.right_edges
            for e in entry_edges:
                e = int(e)
                if estate[e] != 2:
                    continue
                u = int(graph.edges_u[e])
                if u in visited or not cs.member[u] or cs.find(u) != root:
                    continue
                visited.add(u)
                edges.append((e, u, virt))
                descend(u)
            start = virt
            expect = cs.size[root]
        else:
            start = cs.min_vertex[root]
            visited.add(start)
            descend(start)
            expect = cs.size[root] - 1
        if len(edges) != expect:
            raise InvariantViolation(
                f"spanning tree of cluster {root} has {len(edges)} edges, expected {expect}"
            )
        forest.trees.append(
            ClusterTree(
                root=root,
                start_vertex=start,
                edges=edges,
                n_vertices=cs.size[root],
                boundary=bool(sides),
            )
        )
    return forest


def peel(forest: SpanningForest, syn: Syndrome) -> Correction:
    """Reverse-order peeling: pop tree edges leaf-first; an edge whose
    leafward endpoint holds a defect joins the correction and flips the
    rootward endpoint's held bit. Boundary entry points absorb flips.
    """
    db = {int(v): 1 for v in syn.defects}
    corr: list[int] = []
    for tree in forest.trees:
        hold: dict[int, int] = {}
        for e, child, parent in reversed(tree.edges):
            bit = db.get(child, 0) ^ hold.pop(child, 0)
            if bit:
                corr.append(e)
                if not tree.boundary or parent != tree.start_vertex:
                    hold[parent] = hold.get(parent, 0) ^ 1
        if not tree.boundary:
            leftover = db.get(tree.start_vertex, 0) ^ hold.pop(tree.start_vertex, 0)
            if leftover:
                raise InvariantViolation(
                    f"leftover defect at non-boundary root {tree.start_vertex}"
                )
    corr.sort()
    return Correction(edge_ids=np.asarray(corr, dtype=np.int64))


class Decoder:
    """Reusable decoder instance (single-threaded; one per worker)."""

    def __init__(self, graph: DecodingGraph):
        self.graph = graph
        self.cs = ClusterSet(graph)

    def grow(self, defects) -> ClusterSet:
        self.cs.reset()
        self.cs.seed_defects(defects)
        self.cs.grow()
        return self.cs

    def decode_defects(self, defects) -> tuple[Correction, DecodeStats]:
        cs = self.grow(defects)
        forest = spanning_forest(self.graph, cs)
        corr = peel(forest, Syndrome(defects=np.asarray(defects, dtype=np.int64),
                                     length=self.graph.n_internal))
        stats = cluster_stats(cs, forest)
        return corr, stats

    def decode(self, syn: Syndrome) -> tuple[Correction, DecodeStats]:
        return self.decode_defects(syn.defects)


def cluster_stats(cs: ClusterSet, forest: SpanningForest | None = None) -> DecodeStats:
    roots = cs.sorted_roots()
    tree_edges: tuple
    if forest is not None:
        tree_edges = tuple(len(t.edges) for t in forest.trees)
    else:
        # spanning tree size without building it: size-1, +1 boundary entry
        tree_edges = tuple(
            cs.size[r] - (0 if cs.boundary_sides[r] else 1) for r in roots
        )
    return DecodeStats(
        m=len(roots),
        sizes=tuple(cs.size[r] for r in roots),
        growth_steps=tuple(cs.growth_steps[r] for r in roots),
        boundary=tuple(bool(cs.boundary_sides[r]) for r in roots),
        tree_edges=tree_edges,
        passes=cs.passes,
    )


def decode(graph: DecodingGraph, syn: Syndrome) -> tuple[Correction, DecodeStats]:
    """Full decode: grow clusters, build the forest, peel."""
    return Decoder(graph).decode(syn)


def assess(
    graph: DecodingGraph,
    err: ErrorPattern,
    corr: Correction,
    stats: DecodeStats | None = None,
) -> DecodeOutcome:
    """Check the residual error err XOR corr for logical failure."""
    residual = np.setxor1d(err.edge_ids, corr.edge_ids)
    if syndrome_indices_of_edges(graph, residual).size:
        raise InvariantViolation("correction does not cancel the syndrome")
    bit = logical_crossing_parity(graph, residual)
    return DecodeOutcome(success=(bit == 0), residual_logical=bit, stats=stats)
