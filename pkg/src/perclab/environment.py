"""Deterministic lazy bond environments.

Every bond state is a pure function of (seed, replicate, edge); nothing is
ever stored globally, so a d=11 exploration touches only the edges it
visits.  The mapping is pinned exactly so independent implementations can
reproduce the stream bit-for-bit:

Canonical edge encoding (MIXER_ID = "splitmix64-zigzag-v1"):
  * an edge is the unordered pair {x, y} of adjacent points; let a be the
    lexicographically smaller endpoint and b the larger;
  * each coordinate c of a is zig-zag mapped (c >= 0 -> 2c, c < 0 ->
    -2c-1) and emitted as a little-endian base-128 varint (7 data bits
    per byte, high bit = continuation);
  * the index of (b - a) in the adjacency's lexicographically sorted
    offset list is appended as one more varint;
  * edge_bytes = varints(a) + varint(offset_index).

Uniform value:
  * mix(h) is the splitmix64 finalizer
      h ^= h >> 30; h *= 0xBF58476D1CE4E5B9; h &= 2^64-1
      h ^= h >> 27; h *= 0x94D049BB133111EB; h &= 2^64-1
      h ^= h >> 31
  * state h0 = mix(mix((seed & 2^64-1) ^ 0x9E3779B97F4A7C15) ^ (replicate & 2^64-1))
  * edge_bytes is split into 8-byte chunks (last chunk zero-padded); for
    each chunk, h = mix(h ^ little_endian_uint64(chunk)); finally
    h = mix(h ^ len(edge_bytes))
  * u(edge) = h / 2^64, and the bond is open iff u(edge) < p.

Changing any part of this mapping is a breaking change; the MIXER_ID is
recorded in every result manifest.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .geometry import Adjacency, Point

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
MIXER_ID = "splitmix64-zigzag-v1"

# Derived-stream salts (documented: xor'ed into the seed before mixing).
INNER_RESAMPLE_SALT = 0x5BD1E995C2B2AE35
BRW_SALT = 0x27D4EB2F165667C5


def mix64(h: int) -> int:
    """splitmix64 finalizer; a bijection on 64-bit words."""
    h &= MASK64
    h = ((h ^ (h >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    h = ((h ^ (h >> 27)) * 0x94D049BB133111EB) & MASK64
    return h ^ (h >> 31)


def zigzag(v: int) -> int:
    return 2 * v if v >= 0 else -2 * v - 1


def varint(u: int) -> bytes:
    out = bytearray()
    while True:
        b = u & 0x7F
        u >>= 7
        if u:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


_coord_cache: dict[int, bytes] = {}


def _coord_bytes(c: int) -> bytes:
    b = _coord_cache.get(c)
    if b is None:
        b = varint(zigzag(c))
        _coord_cache[c] = b
    return b


def point_bytes(x: Point) -> bytes:
    return b"".join(_coord_bytes(c) for c in x)


def encode_edge(a: Point, b: Point, adj: Adjacency) -> bytes:
    """Canonical byte encoding of the unordered edge {a, b}."""
    if b < a:
        a, b = b, a
    idx = adj.offset_index(len(a))
    off = tuple(q - r for q, r in zip(b, a))
    try:
        k = idx[off]
    except KeyError:
        raise ValueError(f"{a} and {b} are not adjacent under {adj.label()}") from None
    return point_bytes(a) + varint(k)


def stream_state(seed: int, replicate: int) -> int:
    return mix64(mix64((seed & MASK64) ^ _GOLDEN) ^ (replicate & MASK64))


def uniform_from_state(h0: int, data: bytes) -> float:
    """Absorb edge bytes into the stream state; return u in [0, 1)."""
    h = h0
    n = len(data)
    for i in range(0, n, 8):
        h ^= int.from_bytes(data[i:i + 8], "little")
        h = ((h ^ (h >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        h = ((h ^ (h >> 27)) * 0x94D049BB133111EB) & MASK64
        h ^= h >> 31
    h ^= n
    h = ((h ^ (h >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    h = ((h ^ (h >> 27)) * 0x94D049BB133111EB) & MASK64
    h ^= h >> 31
    return h / 18446744073709551616.0


@dataclass(frozen=True)
class LatticeConfig:
    """Immutable description of one deterministic random environment."""

    d: int
    adjacency: Adjacency = Adjacency("nn")
    p: float = 0.5
    seed: int = 0
    replicate: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("bond probability must lie in [0, 1]")

    def with_replicate(self, r: int) -> "LatticeConfig":
        return replace(self, replicate=r)

    def environment(self, replicate: int | None = None) -> "BondEnvironment":
        r = self.replicate if replicate is None else replicate
        return BondEnvironment(self.d, self.adjacency, self.p, self.seed, r)

    def fingerprint(self) -> dict:
        return {
            "d": self.d,
            "adjacency": self.adjacency.label(),
            "p": self.p,
            "seed": self.seed,
            "mixer": MIXER_ID,
        }


class BondEnvironment:
    """Lazy hashed bond states for one (seed, replicate) sample.

    Uniforms are cached per edge so monotone coupling across p is exact:
    for fixed (seed, replicate) the open set at p is a subset of the open
    set at p' >= p.
    """

    __slots__ = ("d", "adjacency", "p", "seed", "replicate",
                 "_h0", "_u", "_pbytes", "_offidx")

    def __init__(self, d: int, adjacency: Adjacency, p, seed: int, replicate: int):
        self.d = d
        self.adjacency = adjacency
        self.p = p
        self.seed = seed
        self.replicate = replicate
        self._h0 = stream_state(seed, replicate)
        self._u: dict[tuple[Point, Point], float] = {}
        self._pbytes: dict[Point, bytes] = {}
        self._offidx = adjacency.offset_index(d)

    def uniform(self, a: Point, b: Point) -> float:
        if b < a:
            a, b = b, a
        key = (a, b)
        u = self._u.get(key)
        if u is None:
            pb = self._pbytes.get(a)
            if pb is None:
                pb = point_bytes(a)
                self._pbytes[a] = pb
            off = tuple(q - r for q, r in zip(b, a))
            try:
                k = self._offidx[off]
            except KeyError:
                raise ValueError(
                    f"{a} and {b} are not adjacent under {self.adjacency.label()}") from None
            u = uniform_from_state(self._h0, pb + varint(k))
            self._u[key] = u
        return u

    def is_open(self, a: Point, b: Point) -> bool:
        return self.uniform(a, b) < self.p

    def edge_state(self, a: Point, b: Point) -> tuple[bool, float]:
        u = self.uniform(a, b)
        return u < self.p, u


class ExplicitEnvironment:
    """Environment with a hand-built open edge set (oracles, fixtures).

    Edges absent from the given set are closed.  Edge keys are canonical
    (lexicographically smaller endpoint first).
    """

    __slots__ = ("d", "adjacency", "p", "_open")

    def __init__(self, d: int, adjacency: Adjacency, open_edges, p: float = float("nan")):
        self.d = d
        self.adjacency = adjacency
        self.p = p
        self._open = {canonical_edge(*e) for e in open_edges}

    def is_open(self, a: Point, b: Point) -> bool:
        return (a, b) in self._open if a < b else (b, a) in self._open

    def uniform(self, a: Point, b: Point) -> float:
        return 0.0 if self.is_open(a, b) else 1.0


class OverlayEnvironment:
    """Frozen edge states on top of a fallback environment.

    Used for conditional resampling: edges measurable with respect to an
    explored cluster stay frozen, every other edge is answered by the
    fallback stream.
    """

    __slots__ = ("d", "adjacency", "p", "frozen", "base")

    def __init__(self, frozen: dict[tuple[Point, Point], bool], base):
        self.d = base.d
        self.adjacency = base.adjacency
        self.p = base.p
        self.frozen = frozen
        self.base = base

    def is_open(self, a: Point, b: Point) -> bool:
        key = (a, b) if a < b else (b, a)
        s = self.frozen.get(key)
        if s is not None:
            return s
        return self.base.is_open(a, b)


def canonical_edge(a: Point, b: Point) -> tuple[Point, Point]:
    return (a, b) if a < b else (b, a)


def as_environment(cfg_or_env):
    if isinstance(cfg_or_env, LatticeConfig):
        return cfg_or_env.environment()
    return cfg_or_env


def edge_state(cfg: LatticeConfig, edge: tuple[Point, Point]) -> tuple[bool, float]:
    """State and underlying uniform of one edge under the config's stream."""
    a, b = edge
    return cfg.environment().edge_state(a, b)


def inner_environment(cfg: LatticeConfig, outer_replicate: int, inner_replicate: int) -> BondEnvironment:
    """Independent stream for nested resampling, derived from the master seed."""
    seed = mix64((cfg.seed & MASK64) ^ INNER_RESAMPLE_SALT ^ mix64(outer_replicate))
    return BondEnvironment(cfg.d, cfg.adjacency, cfg.p, seed, inner_replicate)
