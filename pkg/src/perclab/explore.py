"""Restricted cluster exploration and cluster-level diagnostics.

All exploration is breadth-first over open edges whose endpoints both lie
in the target region, with neighbors visited in the fixed lexicographic
offset order, so repeated runs walk identical vertex sequences.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import log
from typing import Callable, NamedTuple

from .environment import OverlayEnvironment, as_environment, canonical_edge
from .geometry import Boundary, Point, Region, norm_inf


class SourceOutsideRegion(ValueError):
    pass


class WindowTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class ExplorationCaps:
    """Budgets for exploring clusters that may be huge or infinite."""

    max_vertices: int | None = 1_000_000
    max_radius: int | None = None

    def __post_init__(self):
        if self.max_vertices is not None and self.max_vertices < 1:
            raise ValueError("max_vertices must be positive")
        if self.max_radius is not None and self.max_radius < 0:
            raise ValueError("max_radius must be nonnegative")


UNLIMITED = ExplorationCaps(max_vertices=None, max_radius=None)


@dataclass
class ClusterRecord:
    source: Point
    region: Region
    vertices: frozenset[Point]
    boundary_hits: dict[Boundary, int]
    truncated: bool
    visited_count: int
    caps: ExplorationCaps


def _grow(env, inside: Callable[[Point], bool], source: Point,
          caps: ExplorationCaps,
          stop: Callable[[Point], bool] | None = None,
          blocked: Callable[[Point], bool] | None = None):
    """Core BFS.  Returns (visited set, truncated, hit point or None).

    `stop` short-circuits the walk the first time a visited vertex
    satisfies it (the source included).  `blocked` vertices are never
    entered (the source is exempt).
    """
    offsets = env.adjacency.offsets(env.d)
    max_v = caps.max_vertices
    max_r = caps.max_radius
    is_open = env.is_open

    if stop is not None and stop(source):
        return {source}, False, source
    visited = {source}
    queue = deque((source,))
    truncated = False
    while queue:
        x = queue.popleft()
        for off in offsets:
            y = tuple(a + b for a, b in zip(x, off))
            if y in visited or not inside(y):
                continue
            if blocked is not None and blocked(y):
                continue
            if not is_open(x, y):
                continue
            if max_r is not None and norm_inf(tuple(a - b for a, b in zip(y, source))) > max_r:
                truncated = True
                continue
            if max_v is not None and len(visited) >= max_v:
                return visited, True, None
            visited.add(y)
            if stop is not None and stop(y):
                return visited, truncated, y
            queue.append(y)
    return visited, truncated, None


def explore_cluster(cfg_or_env, source: Point, region: Region,
                    caps: ExplorationCaps = ExplorationCaps(),
                    boundaries: tuple[Boundary, ...] = ()) -> ClusterRecord:
    """Grow the restricted cluster of `source` inside `region`.

    When the record is not truncated its vertex set is exactly the
    region-restricted cluster; under truncation it is a subset and the
    boundary hit counts are lower bounds.
    """
    env = as_environment(cfg_or_env)
    inside = region.predicate()
    if not inside(source):
        raise SourceOutsideRegion(f"{source} is not in {region}")
    visited, truncated, _ = _grow(env, inside, source, caps)
    hits = {}
    for b in boundaries:
        pred = b.predicate()
        hits[b] = sum(1 for v in visited if pred(v))
    return ClusterRecord(source=source, region=region,
                         vertices=frozenset(visited), boundary_hits=hits,
                         truncated=truncated, visited_count=len(visited),
                         caps=caps)


class Reach(NamedTuple):
    connected: bool
    truncated: bool


def _target_predicate(target) -> Callable[[Point], bool]:
    if isinstance(target, tuple):
        return lambda x: x == target
    if isinstance(target, Boundary):
        return target.predicate()
    return target


def connected(cfg_or_env, x: Point, target, region: Region,
              caps: ExplorationCaps = ExplorationCaps()) -> Reach:
    """Whether x reaches `target` (a Point, Boundary, or predicate) in region."""
    env = as_environment(cfg_or_env)
    inside = region.predicate()
    if not inside(x):
        raise SourceOutsideRegion(f"{x} is not in {region}")
    _, truncated, hit = _grow(env, inside, x, caps, stop=_target_predicate(target))
    return Reach(hit is not None, truncated)


def connected_off(cfg_or_env, y: Point, target, region: Region,
                  forbidden, caps: ExplorationCaps = ExplorationCaps()) -> Reach:
    """Connection from y to target by open paths meeting `forbidden` only at y.

    The walk never expands into forbidden \\ {y}; y itself may lie in the
    forbidden set (it is the one permitted touch point).
    """
    env = as_environment(cfg_or_env)
    inside = region.predicate()
    if not inside(y):
        raise SourceOutsideRegion(f"{y} is not in {region}")
    fset = forbidden if isinstance(forbidden, (set, frozenset)) else set(forbidden)
    blocked = (lambda v: v in fset and v != y) if fset else None
    _, truncated, hit = _grow(env, inside, y, caps,
                              stop=_target_predicate(target), blocked=blocked)
    return Reach(hit is not None, truncated)


class BoundaryCount(NamedTuple):
    count: int
    truncated: bool


def boundary_count(cfg_or_env, D: Region, Q: Boundary, z: Point,
                   caps: ExplorationCaps = ExplorationCaps()) -> BoundaryCount:
    """Number of vertices of Q reachable from z inside D; exact unless truncated."""
    rec = explore_cluster(cfg_or_env, z, D, caps, boundaries=(Q,))
    return BoundaryCount(rec.boundary_hits[Q], rec.truncated)


def cluster_measurable_edges(env, cluster: frozenset[Point], region: Region) -> dict:
    """Edge states determined by a restricted cluster realization.

    These are the edges with both endpoints in the cluster (at their
    realized states) and the edges from the cluster to the rest of the
    region (necessarily closed).  Everything else stays random.
    """
    inside = region.predicate()
    offsets = env.adjacency.offsets(env.d)
    frozen: dict[tuple[Point, Point], bool] = {}
    for x in cluster:
        for off in offsets:
            y = tuple(a + b for a, b in zip(x, off))
            if y in cluster:
                frozen[canonical_edge(x, y)] = env.is_open(x, y)
            elif inside(y):
                frozen[canonical_edge(x, y)] = False
    return frozen


def pivotal_edges(cfg_or_env, x: Point, y: Point, window: Region,
                  max_edges: int = 4096) -> list[tuple[Point, Point]]:
    """Edges whose single flip changes the indicator of {x <-> y in window}.

    Exhaustive per-edge flip over the window's edge set; a test utility,
    guarded against large windows.
    """
    env = as_environment(cfg_or_env)
    edges = window_edges(window, env.adjacency)
    if len(edges) > max_edges:
        raise WindowTooLarge(f"{len(edges)} edges exceeds the flip budget {max_edges}")
    base = connected(env, x, y, window, UNLIMITED).connected
    out = []
    for e in edges:
        flipped = OverlayEnvironment({e: not env.is_open(*e)}, env)
        if connected(flipped, x, y, window, UNLIMITED).connected != base:
            out.append(e)
    return out


def window_edges(window: Region, adjacency) -> list[tuple[Point, Point]]:
    """All adjacency edges with both endpoints in a bounded region, canonical order."""
    inside = window.predicate()
    offsets = adjacency.offsets(window.d)
    pos = [o for o in offsets if o > (0,) * window.d]
    edges = []
    for v in window.enumerate():
        for off in pos:
            w = tuple(a + b for a, b in zip(v, off))
            if inside(w):
                edges.append((v, w))
    return edges


class RegularityResult(NamedTuple):
    size_in_ball: int
    ts_holds: bool
    indeterminate: bool
    truncated: bool


def size_threshold(s: int) -> float:
    """Volume scale s^4 (ln s)^7 separating typical from oversized clusters."""
    return s ** 4 * log(s) ** 7


def regularity_diagnostic(cfg_or_env, x: Point, s: int,
                          caps: ExplorationCaps | None = None) -> RegularityResult:
    """Size of the full-lattice cluster of x within x + B(s) vs. s^4 ln^7 s.

    Natural log throughout.  The default radius cap is 2s; a cap firing
    before the ball is exhausted makes a holds-verdict indeterminate
    (the size is then only a lower bound).
    """
    if s < 2:
        raise ValueError("s must be >= 2")
    env = as_environment(cfg_or_env)
    if caps is None:
        caps = ExplorationCaps(max_vertices=1_000_000, max_radius=2 * s)
    window = Region(env.d, "Z")
    eff = ExplorationCaps(caps.max_vertices,
                          caps.max_radius if caps.max_radius is not None else 2 * s)
    visited, truncated, _ = _grow(env, window.predicate(), x, eff)
    ball = Region(env.d, "B", (s,), shift=x).predicate()
    size = sum(1 for v in visited if ball(v))
    thresh = size_threshold(s)
    holds = size < thresh
    return RegularityResult(size, holds, truncated and holds, truncated)
