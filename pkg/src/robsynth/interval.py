"""Axis-aligned boxes and outward-rounded interval arithmetic.

Every arithmetic endpoint is rounded outward by one ulp so that the exact
real result is always contained, which is what the reach over-approximation
relies on.  Boxes are closed; zero-width boxes are allowed.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

_INF = math.inf


class DimensionMismatch(ValueError):
    pass


class EmptyRegionError(ValueError):
    pass


def _down(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


class Interval:
    """Closed interval [lo, hi] with lo <= hi; EMPTY is a distinct sentinel."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: float, hi: float):
        lo = float(lo)
        hi = float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if lo > hi:
            raise ValueError(f"invalid interval: lo={lo} > hi={hi}")
        self.lo = lo
        self.hi = hi

    @classmethod
    def point(cls, v: float) -> "Interval":
        return cls(v, v)

    @property
    def is_empty(self) -> bool:
        return self.lo != self.lo  # NaN check, true only for EMPTY_INTERVAL

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def mag(self) -> float:
        """Largest absolute value attained on the interval."""
        return max(abs(self.lo), abs(self.hi))

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        if self.is_empty or other.is_empty:
            return self.is_empty and other.is_empty
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi)) if not self.is_empty else hash("empty")

    def __repr__(self):
        if self.is_empty:
            return "Interval.EMPTY"
        return f"[{self.lo}, {self.hi}]"

    def __contains__(self, v: float) -> bool:
        return (not self.is_empty) and self.lo <= v <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        if other.is_empty:
            return True
        if self.is_empty:
            return False
        return self.lo <= other.lo and other.hi <= self.hi

    def intersects(self, other: "Interval") -> bool:
        if self.is_empty or other.is_empty:
            return False
        return self.lo <= other.hi and other.lo <= self.hi

    def intersection(self, other: "Interval") -> "Interval":
        if not self.intersects(other):
            return EMPTY_INTERVAL
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))

    def hull(self, other: "Interval") -> "Interval":
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    # -- outward-rounded arithmetic ------------------------------------

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)  # negation is exact

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(_down(self.lo + other.lo), _up(self.hi + other.hi))

    def __sub__(self, other: "Interval") -> "Interval":
        return Interval(_down(self.lo - other.hi), _up(self.hi - other.lo))

    def __mul__(self, other: "Interval") -> "Interval":
        cands = (self.lo * other.lo, self.lo * other.hi,
                 self.hi * other.lo, self.hi * other.hi)
        return Interval(_down(min(cands)), _up(max(cands)))

    def __truediv__(self, other: "Interval") -> "Interval":
        if other.lo <= 0.0 <= other.hi:
            raise ZeroDivisionError("divisor interval contains zero")
        cands = (self.lo / other.lo, self.lo / other.hi,
                 self.hi / other.lo, self.hi / other.hi)
        return Interval(_down(min(cands)), _up(max(cands)))

    def pow_int(self, n: int) -> "Interval":
        if n != int(n):
            raise ValueError("exponent must be an integer")
        n = int(n)
        if n == 0:
            return Interval(1.0, 1.0)
        if n < 0:
            return Interval(1.0, 1.0) / self.pow_int(-n)
        a, b = self.lo ** n, self.hi ** n
        if n % 2 == 1:
            return Interval(_down(a), _up(b))
        if self.lo >= 0.0:
            return Interval(_down(a), _up(b))
        if self.hi <= 0.0:
            return Interval(_down(b), _up(a))
        return Interval(0.0, _up(max(a, b)))  # zero attained exactly

    def widen(self, r: float) -> "Interval":
        """Inflate both endpoints by r >= 0 (exact no-op when r == 0)."""
        if r < 0.0 or math.isnan(r):
            raise ValueError(f"inflation radius must be >= 0, got {r}")
        if r == 0.0:
            return self
        return Interval(_down(self.lo - r), _up(self.hi + r))


def _empty_interval() -> Interval:
    iv = object.__new__(Interval)
    iv.lo = math.nan
    iv.hi = math.nan
    return iv


EMPTY_INTERVAL = _empty_interval()

_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi


def _has_point(lo: float, hi: float, base: float, period: float) -> bool:
    """Does {base + k*period} intersect [lo, hi]?"""
    return math.floor((hi - base) / period) >= math.ceil((lo - base) / period)


def interval_sin(x: Interval) -> Interval:
    if x.width >= _TWO_PI:
        return Interval(-1.0, 1.0)
    hi = 1.0 if _has_point(x.lo, x.hi, _HALF_PI, _TWO_PI) else _up(max(math.sin(x.lo), math.sin(x.hi)))
    lo = -1.0 if _has_point(x.lo, x.hi, -_HALF_PI, _TWO_PI) else _down(min(math.sin(x.lo), math.sin(x.hi)))
    return Interval(lo, hi)


def interval_cos(x: Interval) -> Interval:
    if x.width >= _TWO_PI:
        return Interval(-1.0, 1.0)
    hi = 1.0 if _has_point(x.lo, x.hi, 0.0, _TWO_PI) else _up(max(math.cos(x.lo), math.cos(x.hi)))
    lo = -1.0 if _has_point(x.lo, x.hi, math.pi, _TWO_PI) else _down(min(math.cos(x.lo), math.cos(x.hi)))
    return Interval(lo, hi)


def interval_tan(x: Interval) -> Interval:
    if x.width >= math.pi or _has_point(x.lo, x.hi, _HALF_PI, math.pi):
        raise ZeroDivisionError("tan pole inside interval")
    lo, hi = math.tan(x.lo), math.tan(x.hi)
    if lo > hi:  # pole slipped through the float test
        raise ZeroDivisionError("tan pole inside interval")
    return Interval(_down(lo), _up(hi))


def interval_atan(x: Interval) -> Interval:
    return Interval(_down(math.atan(x.lo)), _up(math.atan(x.hi)))


def interval_exp(x: Interval) -> Interval:
    return Interval(_down(math.exp(x.lo)), _up(math.exp(x.hi)))


def interval_sqrt(x: Interval) -> Interval:
    if x.lo < 0.0:
        raise ValueError("sqrt of interval reaching below zero")
    return Interval(_down(math.sqrt(x.lo)), _up(math.sqrt(x.hi)))


def interval_abs(x: Interval) -> Interval:
    if x.lo >= 0.0:
        return x
    if x.hi <= 0.0:
        return -x
    return Interval(0.0, max(-x.lo, x.hi))


class Box:
    """Product of closed intervals; the empty box is Box.empty(dims)."""

    __slots__ = ("dims", "ivs")

    def __init__(self, intervals: Iterable[Interval]):
        ivs = tuple(intervals)
        if not ivs:
            raise ValueError("box needs at least one dimension")
        if any(iv.is_empty for iv in ivs):
            raise ValueError("component intervals must be non-empty; use Box.empty")
        self.dims = len(ivs)
        self.ivs = ivs

    @classmethod
    def from_bounds(cls, los: Sequence[float], his: Sequence[float]) -> "Box":
        if len(los) != len(his):
            raise DimensionMismatch("lo/hi length mismatch")
        return cls(Interval(lo, hi) for lo, hi in zip(los, his))

    @classmethod
    def from_flat(cls, bounds: Sequence[float]) -> "Box":
        """Alternating lo, hi per dimension: (lo1, hi1, lo2, hi2, ...)."""
        if len(bounds) % 2 != 0:
            raise ValueError("flat bounds must have even length")
        return cls(Interval(bounds[i], bounds[i + 1]) for i in range(0, len(bounds), 2))

    @classmethod
    def point(cls, p: Sequence[float]) -> "Box":
        return cls(Interval.point(v) for v in p)

    @classmethod
    def empty(cls, dims: int) -> "Box":
        b = object.__new__(cls)
        b.dims = dims
        b.ivs = None
        return b

    @property
    def is_empty(self) -> bool:
        return self.ivs is None

    @property
    def lo(self) -> tuple:
        return tuple(iv.lo for iv in self.ivs)

    @property
    def hi(self) -> tuple:
        return tuple(iv.hi for iv in self.ivs)

    def __eq__(self, other):
        if not isinstance(other, Box):
            return NotImplemented
        if self.is_empty or other.is_empty:
            return self.is_empty and other.is_empty and self.dims == other.dims
        return self.ivs == other.ivs

    def __hash__(self):
        return hash((self.dims, self.ivs))

    def __repr__(self):
        if self.is_empty:
            return f"Box.empty({self.dims})"
        return " x ".join(repr(iv) for iv in self.ivs)

    def _check_dims(self, other: "Box"):
        if self.dims != other.dims:
            raise DimensionMismatch(f"boxes of dims {self.dims} and {other.dims}")

    def width(self) -> float:
        """Largest component width."""
        if self.is_empty:
            raise EmptyRegionError("width of the empty box")
        return max(iv.width for iv in self.ivs)

    def inflate(self, radii) -> "Box":
        """Widen each component by r_i on both sides; scalar radii broadcast."""
        if self.is_empty:
            raise EmptyRegionError("inflate of the empty box")
        if isinstance(radii, (int, float)):
            radii = (float(radii),) * self.dims
        else:
            radii = tuple(float(r) for r in radii)
            if len(radii) != self.dims:
                raise DimensionMismatch(
                    f"{len(radii)} radii for a {self.dims}-dimensional box")
        return Box(iv.widen(r) for iv, r in zip(self.ivs, radii))

    def bisect(self) -> tuple["Box", "Box"]:
        """Split at the midpoint of a widest dimension (lowest index on ties)."""
        if self.is_empty:
            raise EmptyRegionError("bisect of the empty box")
        w = self.width()
        if w <= 0.0:
            raise ValueError("cannot bisect a point box")
        d = next(i for i, iv in enumerate(self.ivs) if iv.width == w)
        iv = self.ivs[d]
        mid = iv.mid
        left = list(self.ivs)
        right = list(self.ivs)
        left[d] = Interval(iv.lo, mid)
        right[d] = Interval(mid, iv.hi)
        return Box(left), Box(right)

    def contains(self, inner: "Box") -> bool:
        self._check_dims(inner)
        if inner.is_empty:
            return True
        if self.is_empty:
            return False
        return all(a.contains_interval(b) for a, b in zip(self.ivs, inner.ivs))

    def intersects(self, other: "Box") -> bool:
        self._check_dims(other)
        if self.is_empty or other.is_empty:
            return False
        return all(a.intersects(b) for a, b in zip(self.ivs, other.ivs))

    def intersection(self, other: "Box") -> "Box":
        self._check_dims(other)
        if not self.intersects(other):
            return Box.empty(self.dims)
        return Box(a.intersection(b) for a, b in zip(self.ivs, other.ivs))

    def hull(self, other: "Box") -> "Box":
        self._check_dims(other)
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return Box(a.hull(b) for a, b in zip(self.ivs, other.ivs))

    def contains_point(self, p: Sequence[float]) -> bool:
        if self.is_empty:
            return False
        if len(p) != self.dims:
            raise DimensionMismatch(f"point of length {len(p)} in {self.dims}-d box")
        return all(v in iv for iv, v in zip(self.ivs, p))

    def midpoint(self) -> tuple:
        if self.is_empty:
            raise EmptyRegionError("midpoint of the empty box")
        return tuple(iv.mid for iv in self.ivs)

    def sample(self, rng) -> tuple:
        """Uniform point from the box (rng: numpy Generator or random.Random)."""
        if self.is_empty:
            raise EmptyRegionError("sample of the empty box")
        u = rng.uniform
        return tuple(u(iv.lo, iv.hi) if iv.width > 0 else iv.lo for iv in self.ivs)


def box_subtract(box: Box, cut: Box) -> list[Box]:
    """box minus cut as a disjoint-interior list of boxes (exact, closed pieces)."""
    box._check_dims(cut)
    if box.is_empty:
        return []
    inter = box.intersection(cut)
    if inter.is_empty:
        return [box]
    pieces = []
    remaining = list(box.ivs)
    for d in range(box.dims):
        iv = remaining[d]
        cd = inter.ivs[d]
        if iv.lo < cd.lo:
            side = list(remaining)
            side[d] = Interval(iv.lo, cd.lo)
            pieces.append(Box(side))
        if cd.hi < iv.hi:
            side = list(remaining)
            side[d] = Interval(cd.hi, iv.hi)
            pieces.append(Box(side))
        remaining[d] = cd
    return pieces


def _shrinks(piece: Box, b: Box) -> bool:
    # b must overlap the relative interior of piece, otherwise subtracting it
    # returns the piece unchanged and the cover search would loop.
    inter = piece.intersection(b)
    if inter.is_empty:
        return False
    return all(ci.width > 0.0 or pi.width == 0.0
               for ci, pi in zip(inter.ivs, piece.ivs))


def box_union_contains(cover: Sequence[Box], target: Box) -> bool:
    """Exact test of target <= union(cover), by recursive box subtraction."""
    if target.is_empty:
        return True
    stack = [target]
    while stack:
        piece = stack.pop()
        if any(b.contains(piece) for b in cover):
            continue
        hit = next((b for b in cover if _shrinks(piece, b)), None)
        if hit is None:
            return False
        stack.extend(box_subtract(piece, hit))
    return True
