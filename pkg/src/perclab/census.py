"""Whole-box cluster census via union-find, and spanning-cluster statistics."""

from __future__ import annotations

from dataclasses import dataclass

from .environment import as_environment
from .geometry import Point, Region, box, annulus, norm_inf


class MemoryBudgetExceeded(RuntimeError):
    pass


class UnionFind:
    """Array-based disjoint sets with path halving and union by size."""

    __slots__ = ("parent", "size")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, i: int) -> int:
        parent = self.parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


@dataclass
class CensusResult:
    box: Region
    inner_r: int
    outer_s: int
    vertices: list[Point]
    index: dict[Point, int]
    labels: list[int]              # vertex index -> cluster root index
    cluster_sizes: dict[int, int]  # root -> #vertices
    spanning_ids: frozenset[int]   # roots meeting both B(r) and the shell of B(s)

    def label_of(self, v: Point) -> int:
        return self.labels[self.index[v]]

    def cluster_vertices(self, root: int) -> set[Point]:
        return {v for v, lab in zip(self.vertices, self.labels) if lab == root}


def _box_union_find(env, region: Region):
    vertices = list(region.enumerate())
    index = {v: i for i, v in enumerate(vertices)}
    uf = UnionFind(len(vertices))
    offsets = env.adjacency.offsets(env.d)
    pos = [o for o in offsets if o > (0,) * env.d]
    is_open = env.is_open
    for v, i in index.items():
        for off in pos:
            w = tuple(a + b for a, b in zip(v, off))
            j = index.get(w)
            if j is not None and is_open(v, w):
                uf.union(i, j)
    return vertices, index, uf


def census(cfg_or_env, region: Region, inner_r: int, outer_s: int,
           memory_budget: int = 2_000_000) -> CensusResult:
    """Union-find over all open edges inside a bounded box region.

    Spanning clusters are those meeting both B(inner_r) and the shell
    {||x|| = outer_s}.  Clusters are box-restricted: connectivity through
    the exterior is not seen, which callers must account for when the
    target quantity is defined through unrestricted clusters.
    """
    env = as_environment(cfg_or_env)
    bb = region.bounding_box()
    approx = 1
    for lo, hi in bb:
        approx *= (hi - lo + 1)
    if approx > memory_budget:
        raise MemoryBudgetExceeded(
            f"{region} spans ~{approx} vertices > budget {memory_budget}")
    vertices, index, uf = _box_union_find(env, region)
    labels = [uf.find(i) for i in range(len(vertices))]
    sizes: dict[int, int] = {}
    for lab in labels:
        sizes[lab] = sizes.get(lab, 0) + 1
    meets_inner: set[int] = set()
    meets_outer: set[int] = set()
    for v, lab in zip(vertices, labels):
        r = norm_inf(v)
        if r <= inner_r:
            meets_inner.add(lab)
        if r == outer_s:
            meets_outer.add(lab)
    return CensusResult(box=region, inner_r=inner_r, outer_s=outer_s,
                        vertices=vertices, index=index, labels=labels,
                        cluster_sizes=sizes,
                        spanning_ids=frozenset(meets_inner & meets_outer))


@dataclass
class SpanningClusterStats:
    cluster_id: int
    size_outer_annulus: int   # vertices in Ann(3n, 5n)
    size_box: int             # vertices in B(5n)
    boundary_access: int      # X: shell-of-B(2n) vertices reaching B(n) inside B(2n)


def spanning_cluster_stats(cen: CensusResult, cfg_or_env, n: int) -> list[SpanningClusterStats]:
    """Per-spanning-cluster size and boundary-access statistics at scale n.

    Requires a census over (at least) B(5n) with inner n and outer 3n.
    The access count is computed by a second union-find pass restricted
    to B(2n).
    """
    env = as_environment(cfg_or_env)
    if cen.inner_r != n or cen.outer_s != 3 * n:
        raise ValueError(f"census was built with (r={cen.inner_r}, s={cen.outer_s}), need (r={n}, s={3 * n})")
    need = box(env.d, 5 * n)
    if any(lo > -5 * n or hi < 5 * n for lo, hi in cen.box.bounding_box()):
        raise ValueError(f"census box {cen.box} does not cover {need}")
    if not cen.spanning_ids:
        return []

    b2 = box(env.d, 2 * n)
    verts2, index2, uf2 = _box_union_find(env, b2)
    # roots of B(2n)-clusters that contain a vertex of B(n)
    reach_inner = {uf2.find(i) for v, i in index2.items() if norm_inf(v) <= n}

    ann_pred = annulus(env.d, 3 * n, 5 * n).predicate()
    b5_pred = need.predicate()
    size_ann: dict[int, int] = {c: 0 for c in cen.spanning_ids}
    size_b5: dict[int, int] = {c: 0 for c in cen.spanning_ids}
    access: dict[int, int] = {c: 0 for c in cen.spanning_ids}
    shell = 2 * n
    for v, lab in zip(cen.vertices, cen.labels):
        if lab not in size_ann:
            continue
        if ann_pred(v):
            size_ann[lab] += 1
        if b5_pred(v):
            size_b5[lab] += 1
        if norm_inf(v) == shell and uf2.find(index2[v]) in reach_inner:
            access[lab] += 1
    return [SpanningClusterStats(c, size_ann[c], size_b5[c], access[c])
            for c in sorted(cen.spanning_ids)]


def regular_spanning_count(stats: list[SpanningClusterStats], n: int, eta: float) -> int:
    """How many spanning clusters meet all three regularity conditions."""
    n2, n4 = eta * n * n, eta * n ** 4
    hi = n ** 4 / eta
    return sum(1 for s in stats
               if s.boundary_access >= n2
               and s.size_outer_annulus >= n4
               and s.size_box <= hi)
