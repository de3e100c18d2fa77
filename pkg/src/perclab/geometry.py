"""Integer-lattice points, adjacency rules, and symbolic regions/boundaries.

Points are plain tuples of ints so that sets, dict keys and tuple
comparisons run at C speed; every region or boundary is a small frozen
descriptor (kind + integer parameters) that answers membership queries
without ever materializing its vertex set.  Only bounded regions can be
enumerated.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Callable, Iterator

Point = tuple[int, ...]


def origin(d: int) -> Point:
    return (0,) * d

def unit(d: int, axis: int) -> Point:
    e = [0] * d
    e[axis] = 1
    return tuple(e)

def norm_inf(x: Point) -> int:
    """l-infinity norm; max/-min of a tuple are C-level builtins."""
    return max(max(x), -min(x))

def add(x: Point, y: Point) -> Point:
    return tuple(a + b for a, b in zip(x, y))

def sub(x: Point, y: Point) -> Point:
    return tuple(a - b for a, b in zip(x, y))

def neg(x: Point) -> Point:
    return tuple(-a for a in x)


class DimensionMismatch(ValueError):
    pass


class UnboundedRegionError(ValueError):
    pass


@dataclass(frozen=True)
class Adjacency:
    """Lattice adjacency: nearest-neighbor, or spread-out with range L.

    Nearest-neighbor joins the 2d points at l1 distance 1; spread-out
    joins every y != x with ||x-y||_inf <= L (degree (2L+1)^d - 1).
    """

    kind: str = "nn"  # "nn" | "spread"
    L: int = 1

    def __post_init__(self):
        if self.kind not in ("nn", "spread"):
            raise ValueError(f"unknown adjacency kind {self.kind!r}")
        if self.L < 1:
            raise ValueError("spread-out range L must be >= 1")

    def offsets(self, d: int) -> tuple[Point, ...]:
        return _offsets(self.kind, self.L, d)

    def degree(self, d: int) -> int:
        if self.kind == "nn":
            return 2 * d
        return (2 * self.L + 1) ** d - 1

    def offset_index(self, d: int) -> dict[Point, int]:
        return _offset_index(self.kind, self.L, d)

    def label(self) -> str:
        return "nn" if self.kind == "nn" else f"spread(L={self.L})"

    @staticmethod
    def from_label(text: str) -> "Adjacency":
        if text == "nn":
            return Adjacency("nn")
        m = re.fullmatch(r"spread\(L=(\d+)\)", text)
        if m:
            return Adjacency("spread", int(m.group(1)))
        raise ValueError(f"bad adjacency label {text!r}")


@lru_cache(maxsize=None)
def _offsets(kind: str, L: int, d: int) -> tuple[Point, ...]:
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if kind == "nn":
        offs = []
        for i in range(d):
            for s in (-1, 1):
                o = [0] * d
                o[i] = s
                offs.append(tuple(o))
    else:
        offs = [o for o in product(range(-L, L + 1), repeat=d) if any(o)]
    return tuple(sorted(offs))


@lru_cache(maxsize=None)
def _offset_index(kind: str, L: int, d: int) -> dict[Point, int]:
    return {o: i for i, o in enumerate(_offsets(kind, L, d))}


def neighbors(x: Point, adj: Adjacency, d: int | None = None) -> list[Point]:
    """Adjacency-defined neighbor set, in lexicographic offset order."""
    if d is not None and len(x) != d:
        raise DimensionMismatch(f"point has dimension {len(x)}, expected {d}")
    n = len(x)
    return [tuple(a + b for a, b in zip(x, o)) for o in _offsets(adj.kind, adj.L, n)]


def _floor(v) -> int:
    return math.floor(v)


# Region kinds and their integer parameter counts.
_REGION_KINDS = {
    "Z": 0,         # full lattice
    "Zplus": 1,     # half-space {x(1) >= n}
    "B": 1,         # box [-n, n]^d
    "BH": 1,        # half-space box B(n) & x(1) >= 0
    "Rect": 1,      # [0,n] x [-4n,4n]^{d-1}
    "Bminus": 1,    # -e1 - BH(n) = [-1-n,-1] x [-n,n]^{d-1}
    "Ann": 2,       # B(n) \ B(m)
    "AnnP": 2,      # B(n) \ Bminus(m)   ("prime" annulus)
    "AnnH": 2,      # BH(n) \ BH(m)
    "RectG": -1,    # general rectangle prod [a_i, b_i], params = (a1,b1,...,ad,bd)
}


@dataclass(frozen=True)
class Region:
    """Symbolic vertex set from the box/half-space/annulus vocabulary.

    Membership is evaluated lazily per point; `shift` moves the region by
    an integer vector (membership tests x - shift).  Non-integer
    parameters floor, so box(d, 3.5) == box(d, 3).
    """

    d: int
    kind: str
    params: tuple[int, ...] = ()
    shift: Point | None = None

    def __post_init__(self):
        if self.kind not in _REGION_KINDS:
            raise ValueError(f"unknown region kind {self.kind!r}")
        npar = _REGION_KINDS[self.kind]
        if npar >= 0 and len(self.params) != npar:
            raise ValueError(f"{self.kind} takes {npar} parameters")
        if self.kind == "RectG" and len(self.params) != 2 * self.d:
            raise ValueError("RectG takes 2*d parameters (a1,b1,...,ad,bd)")
        if self.shift is not None and len(self.shift) != self.d:
            raise DimensionMismatch("shift dimension mismatch")

    # -- membership ---------------------------------------------------

    def contains(self, x: Point) -> bool:
        if len(x) != self.d:
            raise DimensionMismatch(f"point has dimension {len(x)}, expected {self.d}")
        return self.predicate()(x)

    def predicate(self) -> Callable[[Point], bool]:
        """A specialized membership closure (hot path for exploration)."""
        k, p = self.kind, self.params
        if self.shift is not None:
            base = Region(self.d, k, p).predicate()
            s = self.shift
            return lambda x: base(tuple(a - b for a, b in zip(x, s)))
        if k == "Z":
            return lambda x: True
        if k == "Zplus":
            n = p[0]
            return lambda x: x[0] >= n
        if k == "B":
            n = p[0]
            return lambda x: max(x) <= n and min(x) >= -n
        if k == "BH":
            n = p[0]
            return lambda x: x[0] >= 0 and max(x) <= n and min(x) >= -n
        if k == "Rect":
            n = p[0]
            m = 4 * n
            if self.d == 1:
                return lambda x: 0 <= x[0] <= n
            return lambda x: (0 <= x[0] <= n
                              and max(x[1:]) <= m and min(x[1:]) >= -m)
        if k == "Bminus":
            n = p[0]
            if self.d == 1:
                return lambda x: -1 - n <= x[0] <= -1
            return lambda x: (-1 - n <= x[0] <= -1
                              and max(x[1:]) <= n and min(x[1:]) >= -n)
        if k == "Ann":
            m, n = p
            return lambda x: m < max(max(x), -min(x)) <= n
        if k == "AnnP":
            m, n = p
            inner = Region(self.d, "Bminus", (m,)).predicate()
            return lambda x: max(x) <= n and min(x) >= -n and not inner(x)
        if k == "AnnH":
            m, n = p
            return lambda x: (x[0] >= 0 and max(x) <= n and min(x) >= -n
                              and max(max(x), -min(x)) > m)
        if k == "RectG":
            lo = p[0::2]
            hi = p[1::2]
            return lambda x: all(a <= c <= b for c, a, b in zip(x, lo, hi))
        raise AssertionError(k)

    # -- extent --------------------------------------------------------

    @property
    def is_bounded(self) -> bool:
        return self.kind not in ("Z", "Zplus")

    def bounding_box(self) -> tuple[tuple[int, int], ...]:
        """Per-axis [lo, hi] ranges covering the region (bounded kinds only)."""
        if not self.is_bounded:
            raise UnboundedRegionError(f"{self} is unbounded")
        k, p, d = self.kind, self.params, self.d
        if k == "B" or k == "Ann":
            n = p[-1]
            box = [(-n, n)] * d
        elif k == "BH":
            n = p[0]
            box = [(0, n)] + [(-n, n)] * (d - 1)
        elif k == "AnnH":
            n = p[1]
            box = [(0, n)] + [(-n, n)] * (d - 1)
        elif k == "Rect":
            n = p[0]
            box = [(0, n)] + [(-4 * n, 4 * n)] * (d - 1)
        elif k == "Bminus":
            n = p[0]
            box = [(-1 - n, -1)] + [(-n, n)] * (d - 1)
        elif k == "AnnP":
            n = p[1]
            box = [(-n, n)] * d
        elif k == "RectG":
            box = [(a, b) for a, b in zip(p[0::2], p[1::2])]
        else:
            raise AssertionError(k)
        if self.shift is not None:
            box = [(lo + s, hi + s) for (lo, hi), s in zip(box, self.shift)]
        return tuple(box)

    def enumerate(self) -> Iterator[Point]:
        """Yield every member exactly once, in lexicographic order."""
        pred = self.predicate()
        ranges = [range(lo, hi + 1) for lo, hi in self.bounding_box()]
        for x in product(*ranges):
            if pred(x):
                yield x

    def cardinality(self) -> int:
        return sum(1 for _ in self.enumerate())

    def shifted(self, shift: Point) -> "Region":
        if self.shift is not None:
            shift = tuple(a + b for a, b in zip(shift, self.shift))
        return Region(self.d, self.kind, self.params, tuple(shift))

    # -- canonical text form -------------------------------------------

    def to_text(self) -> str:
        k, p = self.kind, self.params
        if k == "Z":
            core = "Z"
        elif k == "Zplus":
            core = f"Zplus(n={p[0]})"
        elif k in ("B", "BH", "Rect", "Bminus"):
            core = f"{k}(n={p[0]})"
        elif k in ("Ann", "AnnP", "AnnH"):
            core = f"{k}(m={p[0]},n={p[1]})"
        elif k == "RectG":
            core = "RectG(" + ",".join(str(v) for v in p) + ")"
        else:
            raise AssertionError(k)
        if self.shift is not None:
            core += "+shift(" + ",".join(str(v) for v in self.shift) + ")"
        return core

    def __str__(self) -> str:
        return self.to_text()


_TEXT_RE = re.compile(
    r"^(?P<kind>[A-Za-z]+)(\((?P<args>[^)]*)\))?"
    r"(\+shift\((?P<shift>[-0-9,]+)\))?$")


def parse_region(text: str, d: int) -> Region:
    """Parse the canonical textual form; round-trips to_text exactly."""
    m = _TEXT_RE.match(text.replace(" ", ""))
    if not m:
        raise ValueError(f"cannot parse region {text!r}")
    kind = m.group("kind")
    if kind not in _REGION_KINDS:
        raise ValueError(f"unknown region kind {kind!r}")
    args = m.group("args")
    params: tuple[int, ...] = ()
    if args:
        vals = []
        for piece in args.split(","):
            piece = piece.split("=")[-1]
            vals.append(_floor(float(piece)) if "." in piece else int(piece))
        params = tuple(vals)
    shift = None
    if m.group("shift"):
        shift = tuple(int(v) for v in m.group("shift").split(","))
    return Region(d, kind, params, shift)


# -- constructors with the floor convention ---------------------------

def lattice(d: int) -> Region:
    return Region(d, "Z")

def half_space(d: int, n=0) -> Region:
    return Region(d, "Zplus", (_floor(n),))

def box(d: int, n) -> Region:
    return Region(d, "B", (_floor(n),))

def half_box(d: int, n) -> Region:
    return Region(d, "BH", (_floor(n),))

def rect(d: int, n) -> Region:
    return Region(d, "Rect", (_floor(n),))

def reflected_box(d: int, n) -> Region:
    return Region(d, "Bminus", (_floor(n),))

def annulus(d: int, m, n) -> Region:
    return Region(d, "Ann", (_floor(m), _floor(n)))

def shifted_annulus(d: int, m, n) -> Region:
    return Region(d, "AnnP", (_floor(m), _floor(n)))

def half_annulus(d: int, m, n) -> Region:
    return Region(d, "AnnH", (_floor(m), _floor(n)))

def rectangle(d: int, bounds) -> Region:
    flat = []
    for a, b in bounds:
        flat += [_floor(a), _floor(b)]
    return Region(d, "RectG", tuple(flat))


# ---------------------------------------------------------------------
# Boundaries
# ---------------------------------------------------------------------

class RelativeBoundaryViolation(ValueError):
    """Raised when a point of A0 is found outside A1 (A0 must nest in A1)."""


@dataclass(frozen=True)
class Boundary:
    """Queryable boundary set.

    Kinds:
      - box_shell(n):   {x: ||x|| = n}
      - hyperplane(n):  {x: x(1) = n}
      - half_shell(n):  {x: x(1) >= 0, ||x|| = n}
      - bh_lattice_boundary(n): boundary of BH(n) relative to the full
        lattice, i.e. {x in BH(n): x(1) = 0 or ||x|| = n}
      - reflected(inner Boundary): {-e1 - y : y in inner}
      - relative(A0, A1): {x in A0: exists y ~ x, y in A1 \\ A0}
      - predicate: arbitrary callable
    """

    d: int
    kind: str
    params: tuple = ()
    fn: Callable[[Point], bool] | None = field(default=None, compare=False)

    def contains(self, x: Point) -> bool:
        return self.predicate()(x)

    def predicate(self) -> Callable[[Point], bool]:
        k, p = self.kind, self.params
        if k == "box_shell":
            n = p[0]
            return lambda x: max(max(x), -min(x)) == n
        if k == "hyperplane":
            n = p[0]
            return lambda x: x[0] == n
        if k == "half_shell":
            n = p[0]
            return lambda x: x[0] >= 0 and max(max(x), -min(x)) == n
        if k == "bh_lattice_boundary":
            n = p[0]
            return lambda x: (0 <= x[0] and max(x) <= n and min(x) >= -n
                              and (x[0] == 0 or max(max(x), -min(x)) == n))
        if k == "reflected":
            inner = p[0].predicate()
            return lambda x: inner(_reflect(x))
        if k == "relative":
            a0, a1, adj = p
            in0 = a0.predicate()
            in1 = a1.predicate()
            offs = _offsets(adj.kind, adj.L, self.d)
            def rel(x: Point) -> bool:
                if not in0(x):
                    return False
                if not in1(x):
                    raise RelativeBoundaryViolation(
                        f"{x} lies in A0 but outside A1 (A0 must be a subset of A1)")
                for o in offs:
                    y = tuple(a + b for a, b in zip(x, o))
                    if not in0(y) and in1(y):
                        return True
                return False
            return rel
        if k == "predicate":
            return self.fn  # type: ignore[return-value]
        raise AssertionError(k)

    @property
    def is_bounded(self) -> bool:
        return self.kind in ("box_shell", "half_shell", "bh_lattice_boundary", "reflected")

    def enumerate(self) -> Iterator[Point]:
        if not self.is_bounded:
            raise UnboundedRegionError(f"{self} is unbounded")
        pred = self.predicate()
        if self.kind == "reflected":
            n = _reflected_extent(self)
        else:
            n = self.params[0]
        lo, hi = -n - 1, n + 1
        for x in product(range(lo, hi + 1), repeat=self.d):
            if pred(x):
                yield x

    def to_text(self) -> str:
        k, p = self.kind, self.params
        if k in ("box_shell", "hyperplane", "half_shell", "bh_lattice_boundary"):
            return f"{k}(n={p[0]})"
        if k == "reflected":
            return f"reflected[{p[0].to_text()}]"
        return k

    def __str__(self) -> str:
        return self.to_text()


def _reflect(x: Point) -> Point:
    """x -> -e1 - x, the reflection pairing Bminus(n) with BH(n)."""
    return (-x[0] - 1,) + tuple(-c for c in x[1:])


def _reflected_extent(b: Boundary) -> int:
    inner = b.params[0]
    return inner.params[0] + 1


def box_shell(d: int, n) -> Boundary:
    return Boundary(d, "box_shell", (_floor(n),))

def hyperplane(d: int, n) -> Boundary:
    return Boundary(d, "hyperplane", (_floor(n),))

def half_shell(d: int, n) -> Boundary:
    """S'(n): the boundary of BH(n) relative to the half-space."""
    return Boundary(d, "half_shell", (_floor(n),))

def predicate_boundary(d: int, fn: Callable[[Point], bool], tag: str = "predicate") -> Boundary:
    return Boundary(d, "predicate", (tag,), fn=fn)


def relative_boundary(a0: Region, a1: Region, adj: Adjacency) -> Boundary:
    """Points of A0 adjacent to A1 \\ A0; checks A0 within A1 lazily per query."""
    if a0.d != a1.d:
        raise DimensionMismatch("A0 and A1 dimension mismatch")
    return Boundary(a0.d, "relative", (a0, a1, adj))


def outer_boundary(r: Region) -> Boundary:
    """Outer boundary of an annulus: the shell of its outer box."""
    d, k = r.d, r.kind
    if k in ("Ann", "AnnP"):
        return box_shell(d, r.params[1])
    if k == "AnnH":
        return half_shell(d, r.params[1])
    if k == "B":
        return box_shell(d, r.params[0])
    if k == "BH":
        return half_shell(d, r.params[0])
    raise ValueError(f"no outer boundary defined for {r}")


def inner_boundary(r: Region) -> Boundary:
    """Inner boundary of an annulus (shell just inside the carved-out box)."""
    d, k = r.d, r.kind
    if k == "Ann":
        return box_shell(d, r.params[0] + 1)
    if k == "AnnH":
        return half_shell(d, r.params[0] + 1)
    if k == "AnnP":
        inner = Boundary(d, "bh_lattice_boundary", (r.params[0] + 1,))
        return Boundary(d, "reflected", (inner,))
    raise ValueError(f"no inner boundary defined for {r}")
