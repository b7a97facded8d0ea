"""
Triadic grids, the shifted covering family, rotated spatial plates, and tiles.

A triadic grid of pace (1, m) consists of the cubes

    3^{j+m} (z + w_j + [0,1)^d),    j in Z,  z in Z^d,

where w_j in [0,1)^d is the per-generation fractional offset of a fixed
translation of the whole grid.  Shifts are stored as exact rationals k/W (in
units of the top-generation sidelength) with W coprime to 3; multiplication
by 3 then acts as a bijection on residues mod W, so a single family of W
translates realizes every offset at every generation at resolution 1/W.
This keeps corner arithmetic exact at the scale of the cube in question and
avoids catastrophic cancellation against astronomically large shifts.

The covering family provides, for every cube P (within its generation
range), a member grid and a cube L with P ⊆ L ⊆ (1+3^{-(kappa+9)}) P.  The
required inflation is tiny, so the family has astronomically many members;
it is represented lazily (grids built on demand from their index) and the
member count is recorded, never enumerated.

Tiles pair a rotated spatial plate (sidelength scl along the hyperplane
orthogonal to the tile direction, unit thickness across it) with a triadic
cube on the chart of the spherical cap around e_n.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np
from numpy.typing import NDArray

from .grassmann import Subspace, rotation_between
from .operators import DEFAULT_ALPHA

__all__ = [
    "TriadicGrid",
    "TriadicCube",
    "GridFamily",
    "Plate",
    "Tile",
    "Box",
    "default_kappa",
    "shifted_grid_family",
    "standard_spatial_grid",
    "scale_set_min",
    "in_scale_set",
    "relevant_scales",
    "cap_radius",
    "chart_lift",
    "locate",
    "make_tile",
    "freq_support",
    "dir_support_membership",
    "is_peripheral_offset",
    "peripheral_offsets",
    "peripheral_count",
    "peripheral_rank",
    "peripheral_children",
    "peripheral_children_bruteforce",
    "boxes_intersect",
    "box_contains_box",
    "plates_intersect",
    "measure_geometry_constant",
    "dump_tiles",
]

# Peripheral threshold: children whose set distance from the kappa-center is
# at least 3^{3-kappa} times the parent sidelength, i.e. 27 child sidelengths.
_PERIPHERAL_DIST = 27
_SLACK = 1e-12


def default_kappa(d: int) -> int:
    return math.ceil(9 + math.log(d, 3)) if d > 1 else 9


# ---------------------------------------------------------------------------
# Grids and cubes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TriadicGrid:
    """Triadic grid of pace (1, pace_num/pace_den), translated by the vector
    (shift_num / shift_den) * 3^{j_top + m} componentwise.

    shift_den must be coprime to 3; cubes exist for generations j <= j_top.
    """

    d: int
    pace_num: int = 0
    pace_den: int = 1
    shift_num: tuple[int, ...] = ()
    shift_den: int = 1
    j_top: int = 16

    def __post_init__(self) -> None:
        if not 0 <= self.pace_num < self.pace_den:
            raise ValueError("pace offset must lie in [0, 1)")
        if self.shift_den % 3 == 0 or self.shift_den < 1:
            raise ValueError("shift denominator must be positive and coprime to 3")
        if not self.shift_num:
            object.__setattr__(self, "shift_num", (0,) * self.d)
        if len(self.shift_num) != self.d:
            raise ValueError("shift has wrong dimension")
        if not all(0 <= k < self.shift_den for k in self.shift_num):
            raise ValueError("shift numerators must lie in [0, shift_den)")

    @property
    def m(self) -> float:
        return self.pace_num / self.pace_den

    def sidelength(self, j: int) -> float:
        return 3.0 ** (j + self.m)

    def _check_generation(self, j: int) -> None:
        if j > self.j_top:
            raise ValueError(f"generation {j} above the grid's top generation {self.j_top}")

    def shift_residues(self, j: int) -> tuple[int, ...]:
        """Per-axis numerator of the generation-j fractional offset (over shift_den)."""
        self._check_generation(j)
        p = pow(3, self.j_top - j, self.shift_den)
        return tuple((k * p) % self.shift_den for k in self.shift_num)

    def frac(self, j: int) -> NDArray[np.float64]:
        """Fractional offset of generation j, in units of its sidelength."""
        return np.array(_grid_frac(self, j), dtype=np.float64)

    def cube_containing(self, point: Sequence[float], j: int) -> "TriadicCube":
        p = np.asarray(point, dtype=np.float64)
        side = self.sidelength(j)
        fr = self.frac(j)
        coords = tuple(int(math.floor(p[i] / side - fr[i])) for i in range(self.d))
        return TriadicCube(self, j, coords)


@lru_cache(maxsize=8192)
def _grid_frac(grid: "TriadicGrid", j: int) -> tuple[float, ...]:
    return tuple(r / grid.shift_den for r in grid.shift_residues(j))


@dataclass(frozen=True)
class TriadicCube:
    grid: TriadicGrid
    j: int
    coords: tuple[int, ...]

    @property
    def sidelength(self) -> float:
        return self.grid.sidelength(self.j)

    @property
    def corner(self) -> NDArray[np.float64]:
        return self.sidelength * (
            np.asarray(self.coords, dtype=np.float64) + self.grid.frac(self.j)
        )

    @property
    def center(self) -> NDArray[np.float64]:
        return self.corner + self.sidelength / 2.0

    def contains_point(self, p: Sequence[float]) -> bool:
        s = self.sidelength
        fr = _grid_frac(self.grid, self.j)
        tol = _SLACK * s
        for pi, ci, fi in zip(p, self.coords, fr):
            lo = s * (ci + fi)
            if pi < lo - tol or pi >= lo + s + tol:
                return False
        return True

    def _descend_base(self, kappa: int) -> tuple[int, ...]:
        """Integer coordinates of the lowest kappa-child (offset zero)."""
        W = self.grid.shift_den
        res = self.grid.shift_residues(self.j)
        scale = 3**kappa
        return tuple(scale * z + (scale * c) // W for z, c in zip(self.coords, res))

    def child(self, kappa: int, offset: Sequence[int]) -> "TriadicCube":
        if any(not 0 <= o < 3**kappa for o in offset):
            raise ValueError("child offset out of range")
        base = self._descend_base(kappa)
        return TriadicCube(self.grid, self.j - kappa, tuple(b + o for b, o in zip(base, offset)))

    def parent(self, levels: int = 1) -> "TriadicCube":
        W = self.grid.shift_den
        res = self.grid.shift_residues(self.j + levels)
        scale = 3**levels
        coords = tuple((z - (scale * c) // W) // scale for z, c in zip(self.coords, res))
        return TriadicCube(self.grid, self.j + levels, coords)

    def offset_within(self, ancestor: "TriadicCube") -> tuple[int, ...]:
        """Per-axis child offset of this cube inside the given ancestor."""
        if ancestor.grid != self.grid:
            raise ValueError("cubes belong to different grids")
        kappa = ancestor.j - self.j
        if kappa < 0:
            raise ValueError("ancestor must be coarser")
        base = ancestor._descend_base(kappa)
        return tuple(z - b for z, b in zip(self.coords, base))

    def contains_cube(self, other: "TriadicCube") -> bool:
        """Exact containment for cubes of the same grid (integer arithmetic)."""
        if other.grid != self.grid:
            raise ValueError("cubes belong to different grids")
        if other.j > self.j:
            return False
        off = other.offset_within(self)
        return all(0 <= o < 3 ** (self.j - other.j) for o in off)

    def intersects(self, other: "TriadicCube") -> bool:
        if other.grid == self.grid:
            return self.contains_cube(other) or other.contains_cube(self)
        a0, a1 = self.corner, self.corner + self.sidelength
        b0, b1 = other.corner, other.corner + other.sidelength
        return bool(np.all(a1 > b0 + _SLACK) and np.all(b1 > a0 + _SLACK))

    def nested_or_disjoint(self, other: "TriadicCube") -> bool:
        if other.grid == self.grid:
            return True
        return self.contains_cube(other) or other.contains_cube(self) or not self.intersects(other)

    def children(self, kappa: int = 1, limit: int = 3**12) -> list["TriadicCube"]:
        count = 3 ** (kappa * self.grid.d)
        if count > limit:
            raise ValueError(f"refusing to materialize {count} children; raise limit if intended")
        side = range(3**kappa)
        return [self.child(kappa, off) for off in itertools.product(side, repeat=self.grid.d)]

    def kappa_center(self, kappa: int) -> "TriadicCube":
        o = (3**kappa - 1) // 2
        return self.child(kappa, (o,) * self.grid.d)

    def set_distance(self, other: "TriadicCube") -> float:
        """Euclidean distance between the two cubes as point sets."""
        a0, a1 = self.corner, self.corner + self.sidelength
        b0, b1 = other.corner, other.corner + other.sidelength
        gap = np.maximum(np.maximum(b0 - a1, a0 - b1), 0.0)
        return float(np.linalg.norm(gap))


# --- peripheral children -----------------------------------------------------
#
# A kappa-child at integer offset c (per-axis in 0..3^kappa-1) is peripheral
# iff sum_i max(|c_i - o| - 1, 0)^2 >= 27^2 where o = (3^kappa - 1)/2.  The
# enumeration index tau is the lexicographic rank of the offset among all
# peripheral offsets, fixed once and reused for every tile.


def _gap(c: int, o: int) -> int:
    return max(abs(c - o) - 1, 0)


def is_peripheral_offset(offset: Sequence[int], kappa: int) -> bool:
    o = (3**kappa - 1) // 2
    return sum(_gap(c, o) ** 2 for c in offset) >= _PERIPHERAL_DIST**2


def peripheral_offsets(kappa: int, d: int, limit: int = 3**12) -> Iterator[tuple[int, ...]]:
    """Lexicographic enumeration of peripheral offsets (materializing walk)."""
    count = 3 ** (kappa * d)
    if count > limit:
        raise ValueError("kappa too large for exhaustive enumeration; use rank/membership")
    for off in itertools.product(range(3**kappa), repeat=d):
        if is_peripheral_offset(off, kappa):
            yield off


def _count_axis_below(threshold_sq: int, kappa: int) -> int:
    """Number of single-axis offsets c with gap(c)^2 < threshold_sq."""
    if threshold_sq <= 0:
        return 0
    o = (3**kappa - 1) // 2
    g = math.isqrt(threshold_sq - 1)
    # gap(c) <= g  <=>  |c - o| <= g + 1
    lo, hi = max(0, o - g - 1), min(3**kappa - 1, o + g + 1)
    return hi - lo + 1


def peripheral_count(kappa: int, d: int) -> int:
    """|peripheral kappa-children| via per-axis counting (closed form d <= 2)."""
    total = 3 ** (kappa * d)
    if d == 1:
        return total - _count_axis_below(_PERIPHERAL_DIST**2, kappa)
    if d == 2:
        o = (3**kappa - 1) // 2
        non_peripheral = 0
        for c1 in range(3**kappa):
            rem = _PERIPHERAL_DIST**2 - _gap(c1, o) ** 2
            non_peripheral += _count_axis_below(rem, kappa)
        return total - non_peripheral
    # small-kappa fallback for higher d
    return sum(1 for _ in peripheral_offsets(kappa, d))


def peripheral_rank(offset: Sequence[int], kappa: int, d: int) -> int:
    """Lexicographic index tau (0-based) of a peripheral offset, computed
    without enumerating the whole family for d <= 2."""
    if not is_peripheral_offset(offset, kappa):
        raise ValueError("offset is not peripheral")
    o = (3**kappa - 1) // 2
    if d == 1:
        (c,) = offset
        rank = 0
        left_end = o - _PERIPHERAL_DIST - 1  # last peripheral offset left of center
        rank += max(0, min(c, left_end + 1))
        right_start = o + _PERIPHERAL_DIST + 1
        if c > right_start:
            rank += c - right_start
        return rank
    if d == 2:
        c1, c2 = offset
        rank = 0
        for c1p in range(c1):
            rem = _PERIPHERAL_DIST**2 - _gap(c1p, o) ** 2
            rank += 3**kappa - _count_axis_below(rem, kappa)
        rem = _PERIPHERAL_DIST**2 - _gap(c1, o) ** 2
        rank += sum(1 for c2p in range(c2) if _gap(c2p, o) ** 2 >= rem)
        return rank
    for tau, off in enumerate(peripheral_offsets(kappa, d)):
        if tuple(off) == tuple(offset):
            return tau
    raise AssertionError("unreachable")


def peripheral_children(Q: TriadicCube, kappa: int, limit: int = 3**12) -> list[TriadicCube]:
    return [Q.child(kappa, off) for off in peripheral_offsets(kappa, Q.grid.d, limit=limit)]


def peripheral_children_bruteforce(Q: TriadicCube, kappa: int) -> list[TriadicCube]:
    """Definition-based oracle: enumerate children, compare set distances."""
    center = Q.kappa_center(kappa)
    thresh = 3.0 ** (3 - kappa) * Q.sidelength
    return [c for c in Q.children(kappa) if c.set_distance(center) >= thresh * (1 - 1e-9)]


# ---------------------------------------------------------------------------
# The shifted covering family
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _coprime_to_three_at_least(lo: int) -> int:
    W = lo
    while W % 3 == 0:
        W += 1
    return W


@dataclass(frozen=True)
class GridFamily:
    """Lazy family of shifted triadic grids of pace (1, i/K).

    Any cube P with sidelength within the generation range fits into a
    member cube L with P ⊆ L ⊆ (1+eps) P, eps = 3^{-(kappa+9)}.  Pace
    offsets quantize sidelengths to a factor (1+eps/8); shifts quantize
    positions to eps/16 of a sidelength at every generation simultaneously
    (the denominator is coprime to 3, so rescaling by powers of 3 permutes
    the residues).  Members are indexed but never materialized in bulk.
    """

    d: int
    kappa: int
    j_top: int = 16

    def __post_init__(self) -> None:
        if self.kappa < 9 + math.log(self.d, 3) - 1e-12:
            raise ValueError(f"kappa must be at least 9 + log_3({self.d})")

    @property
    def eps(self) -> float:
        return 3.0 ** -(self.kappa + 9)

    @property
    def num_paces(self) -> int:
        return math.ceil(math.log(3.0) / (2.0 * math.log1p(self.eps / 8.0)))

    @property
    def shifts_per_axis(self) -> int:
        return _coprime_to_three_at_least(math.ceil(16.0 / self.eps))

    @property
    def count(self) -> int:
        """Total number of member grids (recorded, not enumerated)."""
        return self.num_paces * self.shifts_per_axis**self.d

    def member(self, pace_index: int, shift_indices: Sequence[int]) -> TriadicGrid:
        if not 0 <= pace_index < self.num_paces:
            raise IndexError("pace index out of range")
        W = self.shifts_per_axis
        return TriadicGrid(
            d=self.d,
            pace_num=pace_index,
            pace_den=self.num_paces,
            shift_num=tuple(k % W for k in shift_indices),
            shift_den=W,
            j_top=self.j_top,
        )

    def fit(self, corner: Sequence[float], side: float) -> TriadicCube:
        """Return L with [corner, corner+side)^d ⊆ L ⊆ (1+eps)-inflation of it."""
        if side <= 0:
            raise ValueError("cube sidelength must be positive")
        a = np.asarray(corner, dtype=np.float64)
        if a.size != self.d:
            raise ValueError("corner has wrong dimension")
        eps = self.eps
        # quantize the target sidelength (1+eps/2) * side to the pace lattice
        u = math.log(side * (1.0 + eps / 2.0), 3)
        j = math.floor(u)
        i = round((u - j) * self.num_paces)
        if i == self.num_paces:
            i, j = 0, j + 1
        if j > self.j_top:
            raise ValueError("cube too large for the family's generation range")
        lp = 3.0 ** (j + i / self.num_paces)
        # valid left-edge interval per axis: containment plus inflation bound
        lo = np.maximum(a + side - lp, a - eps * side / 2.0)
        hi = np.minimum(a, a + side + eps * side / 2.0 - lp)
        mid = (lo + hi) / 2.0
        W = self.shifts_per_axis
        inv = pow(pow(3, self.j_top - j, W), -1, W)
        shift_indices = []
        coords = []
        for g_star in mid:
            target_frac = g_star / lp - math.floor(g_star / lp)
            r = round(target_frac * W) % W
            shift_indices.append((r * inv) % W)
            coords.append(int(round(g_star / lp - r / W)))
        grid = self.member(i, shift_indices)
        cube = TriadicCube(grid, j, tuple(coords))
        c0, c1 = cube.corner, cube.corner + cube.sidelength
        pad = 1e-6 * eps * side + 1e-14 * float(np.max(np.abs(a)) + side)
        if not (np.all(c0 <= a + pad) and np.all(c1 >= a + side - pad)):
            raise AssertionError("covering construction failed to contain the cube")
        if not (
            np.all(c0 >= a - eps * side / 2 - pad)
            and np.all(c1 <= a + side + eps * side / 2 + pad)
        ):
            raise AssertionError("covering construction exceeded the allowed inflation")
        return cube


def shifted_grid_family(d: int, kappa: int | None = None) -> GridFamily:
    return GridFamily(d, kappa if kappa is not None else default_kappa(d))


# ---------------------------------------------------------------------------
# Scales and the spherical chart
# ---------------------------------------------------------------------------


def scale_set_min(alpha: float) -> float:
    """Smallest s in the scale set {s in 3^Z : 3^6 s alpha >= 1}."""
    k = math.ceil(math.log(1.0 / (3.0**6 * alpha), 3) - 1e-12)
    return 3.0**k


def in_scale_set(s: float, alpha: float) -> bool:
    k = math.log(s, 3)
    return abs(k - round(k)) < 1e-9 and 3.0**6 * s * alpha >= 1.0 - 1e-12


def relevant_scales(alpha: float, count: int) -> list[float]:
    s0 = scale_set_min(alpha)
    return [s0 * 3.0**i for i in range(count)]


def cap_radius(alpha: float) -> float:
    """Radius of the direction cap: directions within 3^5 alpha of e_n."""
    return 3.0**5 * alpha


def chart_lift(y: Sequence[float]) -> NDArray[np.float64]:
    """Inverse of the chart v -> projection onto e_n^perp, on the upper cap."""
    y = np.asarray(y, dtype=np.float64).ravel()
    r2 = float(y @ y)
    if r2 >= 1.0:
        raise ValueError("point outside the chart of the upper hemisphere")
    return np.concatenate([y, [math.sqrt(1.0 - r2)]])


# ---------------------------------------------------------------------------
# Boxes and plates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Oriented box: center + orthonormal axes (rows) + half-widths."""

    center: NDArray[np.float64]
    axes: NDArray[np.float64]
    half: NDArray[np.float64]

    def corners(self) -> NDArray[np.float64]:
        n = self.half.size
        signs = np.array(list(itertools.product([-1.0, 1.0], repeat=n)))
        return self.center + (signs * self.half) @ self.axes

    def contains_point(self, p: Sequence[float], slack: float = _SLACK) -> bool:
        rel = (np.asarray(p, dtype=np.float64) - self.center) @ self.axes.T
        return bool(np.all(np.abs(rel) <= self.half + slack))

    def dilate(self, factor: float) -> "Box":
        return Box(self.center, self.axes, self.half * factor)


def boxes_intersect(b1: Box, b2: Box, slack: float = _SLACK) -> bool:
    """Separating-axis test over the face normals of both boxes.

    Incomplete in dimension > 3 (no edge-cross axes), hence conservative:
    ties and undetected separations count as intersecting, which is the
    safe direction for every predicate built on top of it.
    """
    for axes in (b1.axes, b2.axes):
        for a in axes:
            gap = float((b1.center - b2.center) @ a)
            r1 = float(np.sum(np.abs(b1.axes @ a) * b1.half))
            r2 = float(np.sum(np.abs(b2.axes @ a) * b2.half))
            if abs(gap) > r1 + r2 + slack:
                return False
    return True


def box_contains_box(outer: Box, inner: Box, slack: float = _SLACK) -> bool:
    return all(outer.contains_point(c, slack=slack) for c in inner.corners())


@lru_cache(maxsize=4096)
def _rotation_to_cached(beta: tuple[float, ...]) -> NDArray[np.float64]:
    arr = np.asarray(beta, dtype=np.float64)
    mat = rotation_between(Subspace.horizontal(arr.size), Subspace(arr)).matrix
    mat.setflags(write=False)
    return mat


def _rotation_to(beta: NDArray[np.float64]) -> NDArray[np.float64]:
    """Matrix of the minimal rotation taking e_n to beta (e_n^perp to beta^perp)."""
    return _rotation_to_cached(tuple(float(b) for b in beta))


@dataclass(frozen=True)
class Plate:
    """Rotated spatial plate: image of L x [j, j+1) under the rotation that
    carries e_n to beta.  Thickness 1 along beta, sidelength scl across."""

    beta: tuple[float, ...]
    L: TriadicCube
    vertical: int

    def __post_init__(self) -> None:
        if self.L.sidelength < 1.0 - _SLACK:
            raise ValueError("plate horizontal sidelength must be at least 1")

    @property
    def n(self) -> int:
        return len(self.beta)

    @property
    def scl(self) -> float:
        return self.L.sidelength

    @property
    def measure(self) -> float:
        return self.scl ** (self.n - 1)

    @property
    def beta_vec(self) -> NDArray[np.float64]:
        return np.asarray(self.beta, dtype=np.float64)

    def box(self) -> Box:
        return _plate_box(self)

    def contains_point(self, p: Sequence[float]) -> bool:
        w = _rotation_to(self.beta_vec).T @ np.asarray(p, dtype=np.float64)
        return self.L.contains_point(w[:-1]) and (
            self.vertical - _SLACK <= w[-1] < self.vertical + 1 + _SLACK
        )


@lru_cache(maxsize=65536)
def _plate_box(plate: "Plate") -> Box:
    n = plate.n
    rot = _rotation_to(plate.beta_vec)
    center_flat = np.concatenate([plate.L.center, [plate.vertical + 0.5]])
    half = np.concatenate([np.full(n - 1, plate.scl / 2.0), [0.5]])
    return Box(center=rot @ center_flat, axes=rot.T.copy(), half=half)


def plates_intersect(p1: Plate, p2: Plate) -> bool:
    if np.allclose(p1.beta_vec, p2.beta_vec, atol=1e-14) and p1.L.grid == p2.L.grid:
        # same orientation and grid: exact arithmetic
        return p1.vertical == p2.vertical and p1.L.intersects(p2.L)
    return boxes_intersect(p1.box(), p2.box())


# ---------------------------------------------------------------------------
# Tiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Tile:
    """Spatial plate x frequency cube; the plate is oriented along the lift
    of the cube's center, and scl(R) * l(Q) lands in [1, 3)."""

    R: Plate
    Q: TriadicCube

    def __post_init__(self) -> None:
        prod = self.R.scl * self.Q.sidelength
        if not (1.0 - 1e-9 <= prod < 3.0 * (1 + 1e-9)):
            raise ValueError(f"scl(R) * l(Q) = {prod} outside [1, 3)")

    @property
    def n(self) -> int:
        return self.R.n

    @property
    def scl(self) -> float:
        return self.R.scl

    @property
    def direction(self) -> NDArray[np.float64]:
        """v_t: lift of the cube center to the sphere."""
        return chart_lift(self.Q.center)


def locate(
    beta: Sequence[float], s: float, family: GridFamily, alpha: float = DEFAULT_ALPHA
) -> TriadicCube:
    """Cube of the covering family fit around the cap point beta at scale s.

    Post: 3^3/s <= l(L) <= 3^4/s; the 3^{-kappa}/s ball around beta projects
    into the kappa-center of L; the [3^{-1}/s, 3^2/s] annulus around beta
    projects into peripheral children of L.
    """
    beta = np.asarray(beta, dtype=np.float64)
    if not in_scale_set(s, alpha):
        raise ValueError(f"scale {s} not in the admissible scale set for alpha={alpha}")
    en_gap = float(np.linalg.norm(beta - np.eye(beta.size)[-1]))
    if en_gap > cap_radius(alpha) + 3.0**6 / s:
        raise ValueError("direction beta lies outside the working cap")
    return family.fit(beta[:-1] - 3.0**3 / s, 2.0 * 3.0**3 / s)


def _plate_scale_exponent(cube_side: float) -> int:
    """The unique k with 3^k * cube_side in [1, 3)."""
    return math.ceil(-math.log(cube_side, 3) - 1e-12)


def standard_spatial_grid(d: int) -> TriadicGrid:
    return TriadicGrid(d=d)


def make_tile(
    beta: Sequence[float],
    s: float,
    z: Sequence[float],
    family: GridFamily,
    alpha: float = DEFAULT_ALPHA,
    spatial_grid: TriadicGrid | None = None,
) -> Tile:
    """Tile associated to (direction beta, scale s, spatial point z): the
    located frequency cube, plus the plate containing z at the matching
    scale, oriented along the lift of the cube center."""
    beta = np.asarray(beta, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    Q = locate(beta, s, family, alpha)
    k = _plate_scale_exponent(Q.sidelength)
    if spatial_grid is None:
        spatial_grid = standard_spatial_grid(beta.size - 1)
    v_t = chart_lift(Q.center)
    w = _rotation_to(v_t).T @ z
    L = spatial_grid.cube_containing(w[:-1], k)
    plate = Plate(beta=tuple(v_t), L=L, vertical=math.floor(w[-1]))
    return Tile(R=plate, Q=Q)


def freq_support(t: Tile, kappa: int):
    """Membership predicate for the frequency support of a tile: points of the
    (1/2, 2) annulus whose direction projects into the kappa-center of Q_t."""
    center_cube = t.Q.kappa_center(kappa)

    def member(xi: Sequence[float]) -> bool:
        xi = np.asarray(xi, dtype=np.float64)
        r = float(np.linalg.norm(xi))
        if not (0.5 < r < 2.0):
            return False
        return center_cube.contains_point((xi / r)[:-1])

    return member


def dir_support_membership(t: Tile, kappa: int, v: Sequence[float]) -> int | None:
    """If the sphere point v projects into some peripheral cell of Q_t, return
    that cell's enumeration index tau (0-based); otherwise None."""
    v = np.asarray(v, dtype=np.float64)
    base = t.Q._descend_base(kappa)
    child_side = t.Q.sidelength / 3**kappa
    fr = t.Q.grid.frac(t.Q.j - kappa)
    offset = tuple(
        int(math.floor(v[i] / child_side - fr[i])) - base[i] for i in range(t.Q.grid.d)
    )
    if any(not 0 <= c < 3**kappa for c in offset):
        return None
    if not is_peripheral_offset(offset, kappa):
        return None
    return peripheral_rank(offset, kappa, t.Q.grid.d)


# ---------------------------------------------------------------------------
# Geometry constant search
# ---------------------------------------------------------------------------


def measure_geometry_constant(
    family: GridFamily,
    alpha: float = DEFAULT_ALPHA,
    trials: int = 100,
    max_depth: int = 2,
    seed: int = 0,
) -> float:
    """Empirical constant K such that, over sampled comparable tile pairs
    (Q_{t'} ⊆ Q_t, plates meeting), R_t ⊆ K R_{t'} (concentric dilation).
    Returns the max over pairs of the smallest sufficient K."""
    rng = np.random.default_rng(seed)
    d = family.d
    en = np.zeros(d + 1)
    en[-1] = 1.0
    # plates need sidelength >= 1, which rules out the coarsest scales
    s0 = max(scale_set_min(alpha), 3.0**5)
    spatial = standard_spatial_grid(d)
    worst = 1.0
    for _ in range(trials):
        beta = np.array(en)
        beta[:-1] += cap_radius(alpha) * rng.uniform(-0.5, 0.5, size=d)
        beta /= np.linalg.norm(beta)
        s = s0 * 3.0 ** int(rng.integers(0, 3))
        z = rng.uniform(-2.0, 2.0, size=d + 1) * s / 54.0
        t = make_tile(beta, s, z, family, alpha, spatial)
        depth = int(rng.integers(1, max_depth + 1))
        offset = tuple(int(o) for o in rng.integers(0, 3**depth, size=d))
        Q2 = t.Q.child(depth, offset)
        v2 = chart_lift(Q2.center)
        k2 = _plate_scale_exponent(Q2.sidelength)
        # pick a point of R_t and build the finer plate around it, so the
        # two plates are guaranteed to meet
        box = t.R.box()
        p = box.center + (rng.uniform(-0.9, 0.9, size=d + 1) * box.half) @ box.axes
        w2 = _rotation_to(v2).T @ p
        L2 = spatial.cube_containing(w2[:-1], k2)
        t2 = Tile(R=Plate(beta=tuple(v2), L=L2, vertical=math.floor(w2[-1])), Q=Q2)
        assert t.Q.contains_cube(t2.Q)
        assert plates_intersect(t.R, t2.R)
        K = 1.0
        while not box_contains_box(t2.R.box().dilate(K), t.R.box()) and K < 2**24:
            K *= 1.25
        worst = max(worst, K)
    return worst


def dump_tiles(tiles: Iterable[Tile], path: str) -> None:
    """CSV rows: grid identifiers, generation, cube coords, direction, plate
    coords and vertical index, scl."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for t in tiles:
            g = t.Q.grid
            w.writerow(
                [g.pace_num, g.pace_den, g.shift_den]
                + list(g.shift_num)
                + [t.Q.j]
                + list(t.Q.coords)
                + [repr(b) for b in t.R.beta]
                + list(t.R.L.coords)
                + [t.R.vertical, repr(t.scl)]
            )
