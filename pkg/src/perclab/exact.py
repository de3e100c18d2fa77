"""Exhaustive small-instance oracle.

Sums an event indicator over all 2^|E| bond configurations of a finite
edge set; with a Fraction p the probability comes out as an exact
rational.  This is the independent reference that Monte Carlo estimates
are audited against.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable

from .environment import ExplicitEnvironment, canonical_edge
from .geometry import Adjacency, Point, Region
from .explore import UNLIMITED, connected, connected_off, explore_cluster, window_edges

Edge = tuple[Point, Point]

MAX_EDGES = 24


class EdgeSetTooLarge(ValueError):
    pass


def enumerate_exact(edges: list[Edge], p, event: Callable[[frozenset[Edge]], bool]):
    """P(event) summed exactly over all open-subset configurations.

    `event` receives the frozenset of open edges (canonical endpoint
    order).  Exact rational when p is a Fraction, float otherwise.
    """
    edges = [canonical_edge(*e) for e in edges]
    m = len(edges)
    if m > MAX_EDGES:
        raise EdgeSetTooLarge(f"{m} edges > {MAX_EDGES}")
    one = Fraction(1) if isinstance(p, Fraction) else 1.0
    q = one - p
    # Weight by open count; group masks by popcount to reuse powers.
    pw = [p ** k * q ** (m - k) for k in range(m + 1)]
    total = one * 0
    for mask in range(1 << m):
        k = mask.bit_count()
        if event(frozenset(edges[i] for i in range(m) if mask >> i & 1)):
            total += pw[k]
    return total


def expectation_exact(edges: list[Edge], p, value: Callable[[frozenset[Edge]], float]):
    """E[value] over all configurations, same conventions as enumerate_exact."""
    edges = [canonical_edge(*e) for e in edges]
    m = len(edges)
    if m > MAX_EDGES:
        raise EdgeSetTooLarge(f"{m} edges > {MAX_EDGES}")
    one = Fraction(1) if isinstance(p, Fraction) else 1.0
    q = one - p
    pw = [p ** k * q ** (m - k) for k in range(m + 1)]
    total = one * 0
    for mask in range(1 << m):
        k = mask.bit_count()
        v = value(frozenset(edges[i] for i in range(m) if mask >> i & 1))
        if v:
            total += pw[k] * v
    return total


def distribution_exact(edges: list[Edge], p, value: Callable[[frozenset[Edge]], int]) -> dict:
    """Exact distribution of an integer statistic of the configuration."""
    edges = [canonical_edge(*e) for e in edges]
    m = len(edges)
    if m > MAX_EDGES:
        raise EdgeSetTooLarge(f"{m} edges > {MAX_EDGES}")
    one = Fraction(1) if isinstance(p, Fraction) else 1.0
    q = one - p
    pw = [p ** k * q ** (m - k) for k in range(m + 1)]
    dist: dict[int, object] = {}
    for mask in range(1 << m):
        k = mask.bit_count()
        v = value(frozenset(edges[i] for i in range(m) if mask >> i & 1))
        dist[v] = dist.get(v, one * 0) + pw[k]
    return dist


def _env(d: int, adjacency: Adjacency, open_edges: frozenset[Edge]) -> ExplicitEnvironment:
    return ExplicitEnvironment(d, adjacency, open_edges)


def connection_event(x: Point, target, region: Region,
                     adjacency: Adjacency = Adjacency("nn")) -> Callable:
    """Event {x <-> target within region} as a configuration predicate."""
    def ev(open_edges: frozenset[Edge]) -> bool:
        env = _env(region.d, adjacency, open_edges)
        return connected(env, x, target, region, UNLIMITED).connected
    return ev


def connection_off_event(y: Point, target, region: Region, forbidden,
                         adjacency: Adjacency = Adjacency("nn")) -> Callable:
    fset = frozenset(forbidden)
    def ev(open_edges: frozenset[Edge]) -> bool:
        env = _env(region.d, adjacency, open_edges)
        return connected_off(env, y, target, region, fset, UNLIMITED).connected
    return ev


def cluster_size_value(z: Point, region: Region, count_in: Region | None = None,
                       adjacency: Adjacency = Adjacency("nn")) -> Callable:
    """#C_region(z), optionally intersected with another region."""
    inner = count_in.predicate() if count_in is not None else None
    def val(open_edges: frozenset[Edge]) -> int:
        env = _env(region.d, adjacency, open_edges)
        rec = explore_cluster(env, z, region, UNLIMITED)
        if inner is None:
            return rec.visited_count
        return sum(1 for v in rec.vertices if inner(v))
    return val


def boundary_count_value(z: Point, region: Region, boundary,
                         adjacency: Adjacency = Adjacency("nn")) -> Callable:
    """X_Q(D, z) as a configuration statistic."""
    pred = boundary.predicate()
    def val(open_edges: frozenset[Edge]) -> int:
        env = _env(region.d, adjacency, open_edges)
        rec = explore_cluster(env, z, region, UNLIMITED)
        return sum(1 for v in rec.vertices if pred(v))
    return val


def region_edges(region: Region, adjacency: Adjacency = Adjacency("nn")) -> list[Edge]:
    """Edge universe of a bounded region (both endpoints inside)."""
    return window_edges(region, adjacency)
