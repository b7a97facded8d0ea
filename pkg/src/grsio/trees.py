"""
Trees of tiles: the order relation, signature, size and density maps, and
the greedy density/size decompositions with strong-disjointness checking.

A tree is a set of tiles sharing a top (xi_T, R_T): xi_T lies in every
frequency cube of the tree and every plate meets R_T at no larger scale.
The order t <= t' (cube of t' inside cube of t, plates meeting) is not
transitive, which the selection algorithms below have to work around: the
size decomposition prioritizes candidate tops by the signature of xi_T
(the triadic digit sequence recording at which generations xi sits in a
kappa-center), and removes an enlarged neighborhood E(T) around each
selected tree so that the selected family ends up strongly disjoint.

Size is computed exactly on small collections by enumerating candidate
tops: one representative point per cell of the interval arrangement
generated by the cubes and their kappa-centers (offset by 1/pi of the cell
side so the representative never has triadic coordinates), crossed with
the plates present in the collection (enlarged by up to two generations).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.special import gammaln

from .tiling import (
    Plate,
    Tile,
    TriadicCube,
    TriadicGrid,
    boxes_intersect,
    chart_lift,
    plates_intersect,
    standard_spatial_grid,
)

__all__ = [
    "Tree",
    "CoefficientTable",
    "DirectionField",
    "DEFAULT_K",
    "leq",
    "in_kappa_center",
    "in_dir_support",
    "ensure_nontriadic",
    "signature",
    "maximal_tree",
    "tree_value",
    "size",
    "density",
    "density_decompose",
    "size_decompose",
    "verify_strongly_disjoint",
    "model_form",
    "stopping_decomposition",
    "generate_tile_collection",
    "DensityDecomposition",
    "SizeDecomposition",
]

# Empirical comparability constant (see tiling.measure_geometry_constant;
# measured ~4-5 for d = 1, 2); overridable wherever it is consumed.
DEFAULT_K = 5.0

_SLACK = 1e-9


# ---------------------------------------------------------------------------
# Order and center membership
# ---------------------------------------------------------------------------


def leq(t: Tile, tp: Tile) -> bool:
    """t <= t': the cube of t' sits inside the cube of t and the plates meet."""
    return t.Q.contains_cube(tp.Q) and plates_intersect(t.R, tp.R)


def in_kappa_center(Q: TriadicCube, kappa: int, xi: Sequence[float]) -> bool:
    """Whether xi lies in the kappa-center cell of Q (xi need not lie in Q)."""
    xi = np.asarray(xi, dtype=np.float64)
    if not Q.contains_point(xi):
        return False
    child = Q.grid.cube_containing(xi, Q.j - kappa)
    off = child.offset_within(Q)
    o = (3**kappa - 1) // 2
    return all(c == o for c in off)


def in_dir_support(t: Tile, kappa: int, normals: NDArray[np.float64]) -> NDArray[np.bool_]:
    """Vectorized membership of sphere points in the directional support of a
    tile (the union of its peripheral cells)."""
    normals = np.atleast_2d(np.asarray(normals, dtype=np.float64))
    d = t.Q.grid.d
    y = normals[:, :d]
    base = np.asarray(t.Q._descend_base(kappa))
    child_side = t.Q.sidelength / 3**kappa
    fr = t.Q.grid.frac(t.Q.j - kappa)
    off = np.floor(y / child_side - fr).astype(np.int64) - base
    inside = np.all((off >= 0) & (off < 3**kappa), axis=1)
    o = (3**kappa - 1) // 2
    gap = np.maximum(np.abs(off - o) - 1, 0)
    peripheral = np.sum(gap**2, axis=1) >= 27**2
    return inside & peripheral


# ---------------------------------------------------------------------------
# Signature
# ---------------------------------------------------------------------------


def ensure_nontriadic(
    xi: Sequence[float], grid: TriadicGrid, depth: int
) -> tuple[NDArray[np.float64], bool]:
    """Perturb xi by 3^{-depth-3} if any coordinate is (numerically) triadic
    with respect to the grid down to the given depth."""
    xi = np.asarray(xi, dtype=np.float64).copy()
    tol = 1e-9
    bad = False
    for j in range(1, depth + 1):
        side = grid.sidelength(-j)
        fr = grid.frac(-j)
        rel = xi / side - fr
        if np.any(np.abs(rel - np.round(rel)) < tol):
            bad = True
            break
    if bad:
        xi = xi + 3.0 ** (-depth - 3)
    return xi, bad


def signature(
    xi: Sequence[float], grid: TriadicGrid, kappa: int, depth: int = 20
) -> float:
    """Sum of a_j 3^{-j}, j = 1..depth, with a_j = 0 exactly when xi lies in
    the kappa-center of its generation-(-j) cube."""
    xi, _ = ensure_nontriadic(xi, grid, depth)
    sig = 0.0
    for j in range(1, depth + 1):
        Q = grid.cube_containing(xi, -j)
        if not in_kappa_center(Q, kappa, xi):
            sig += 3.0**-j
    return sig


# ---------------------------------------------------------------------------
# Trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Tree:
    tiles: frozenset
    xi: tuple[float, ...]
    R_T: Plate
    kappa: int

    def __post_init__(self) -> None:
        xi = np.asarray(self.xi, dtype=np.float64)
        for t in self.tiles:
            if not t.Q.contains_point(xi):
                raise ValueError("tree top frequency point outside a member cube")
            if t.R.scl > self.R_T.scl * (1 + _SLACK):
                raise ValueError("member plate exceeds the top scale")
            if not plates_intersect(t.R, self.R_T):
                raise ValueError("member plate disjoint from the top plate")

    @property
    def measure(self) -> float:
        return self.R_T.measure

    @property
    def kind(self) -> str:
        xi = np.asarray(self.xi, dtype=np.float64)
        flags = {in_kappa_center(t.Q, self.kappa, xi) for t in self.tiles}
        if flags <= {False}:
            return "lacunary"
        if flags <= {True}:
            return "overlapping"
        return "mixed"


def maximal_tree(
    tiles: Iterable[Tile],
    xi: Sequence[float],
    R_T: Plate,
    kappa: int,
    lacunary_only: bool = False,
) -> Tree:
    """Largest tree with the given top contained in the tile set."""
    xi = np.asarray(xi, dtype=np.float64)
    members = []
    for t in tiles:
        if not t.Q.contains_point(xi):
            continue
        if t.R.scl > R_T.scl * (1 + _SLACK):
            continue
        if not plates_intersect(t.R, R_T):
            continue
        if lacunary_only and in_kappa_center(t.Q, kappa, xi):
            continue
        members.append(t)
    return Tree(tiles=frozenset(members), xi=tuple(xi), R_T=R_T, kappa=kappa)


# ---------------------------------------------------------------------------
# Coefficient tables and direction fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientTable:
    """Per-tile nonnegative coefficients (F_val, A_val), tagged with the decay
    order M that produced them."""

    table: dict
    M: int

    def __post_init__(self) -> None:
        for t, (fv, av) in self.table.items():
            if not (np.isfinite(fv) and np.isfinite(av) and fv >= 0 and av >= 0):
                raise ValueError(f"invalid coefficients {(fv, av)} for tile {t}")

    def F(self, t: Tile) -> float:
        return self.table[t][0]

    def A(self, t: Tile) -> float:
        return self.table[t][1]

    def scale_F(self, c: float) -> "CoefficientTable":
        return CoefficientTable({t: (c * fv, av) for t, (fv, av) in self.table.items()}, self.M)


@dataclass(frozen=True)
class DirectionField:
    """Sampled measurable direction field: lattice points x, unit directions
    v(x), and the membership mask of the set E."""

    points: NDArray[np.float64]  # (N, n)
    normals: NDArray[np.float64]  # (N, n)
    mask: NDArray[np.bool_]  # (N,)
    cell_volume: float
    max_tilt: float

    def __post_init__(self) -> None:
        if self.points.shape != self.normals.shape or self.mask.shape != self.points.shape[:1]:
            raise ValueError("inconsistent field shapes")
        norms = np.linalg.norm(self.normals, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("directions must be unit vectors")
        en = np.zeros(self.points.shape[1])
        en[-1] = 1.0
        tilt = np.linalg.norm(self.normals - en, axis=1)
        if np.any(tilt > self.max_tilt + 1e-12):
            raise ValueError("direction field leaves the admissible cap")

    @property
    def measure_E(self) -> float:
        return float(np.sum(self.mask)) * self.cell_volume


# ---------------------------------------------------------------------------
# Size
# ---------------------------------------------------------------------------


def _chi_norm(M: int, n: int) -> float:
    """Normalizing constant making x -> c <x>^{-M} a unit-mass bump on R^n."""
    log_c = gammaln(M / 2) - gammaln((M - n) / 2) - (n / 2) * math.log(math.pi)
    return math.exp(log_c)


def sy_bump(plate: Plate, points: NDArray[np.float64], M: int) -> NDArray[np.float64]:
    """Sy^1-rescaled unit-mass bump of decay M adapted to the plate."""
    from .tiling import _rotation_to

    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = plate.n
    rot = _rotation_to(plate.beta_vec)
    center = rot @ np.concatenate([plate.L.center, [plate.vertical + 0.5]])
    w = (pts - center) @ rot
    arg2 = np.sum((w[:, :-1] / plate.scl) ** 2, axis=1) + w[:, -1] ** 2
    return _chi_norm(M, n) * (1.0 + arg2) ** (-M / 2) / plate.measure


def _top_points(tiles: Sequence[Tile], kappa: int) -> list[NDArray[np.float64]]:
    """One representative interior point per cell of the axis-aligned
    arrangement generated by the cubes and their kappa-centers."""
    d = tiles[0].Q.grid.d
    breaks: list[set] = [set() for _ in range(d)]
    for t in tiles:
        for Q in (t.Q, t.Q.kappa_center(kappa)):
            c = Q.corner
            for i in range(d):
                breaks[i].add(float(c[i]))
                breaks[i].add(float(c[i] + Q.sidelength))
    axes = [sorted(b) for b in breaks]
    reps_per_axis = [
        [lo + (hi - lo) / math.pi for lo, hi in zip(a[:-1], a[1:])] for a in axes
    ]
    return [np.array(p) for p in itertools.product(*reps_per_axis)]


def _plate_candidates(tiles: Sequence[Tile], enlarge: int = 2) -> list[Plate]:
    plates = {t.R for t in tiles}
    out = set(plates)
    for p in plates:
        L = p.L
        for _ in range(enlarge):
            if L.j + 1 > L.grid.j_top:
                break
            L = L.parent()
            out.add(Plate(beta=p.beta, L=L, vertical=p.vertical))
    return sorted(out, key=lambda p: (p.scl, p.L.coords, p.vertical, p.beta))


def _size_matrices(tiles: Sequence[Tile], kappa: int, tops, plates):
    """Boolean membership matrices: (top, tile) lacunary membership and
    (plate, tile) scale/intersection compatibility."""
    T = len(tiles)
    in_lac = np.zeros((len(tops), T), dtype=bool)
    for a, xi in enumerate(tops):
        for b, t in enumerate(tiles):
            in_lac[a, b] = t.Q.contains_point(xi) and not in_kappa_center(t.Q, kappa, xi)
    compat = np.zeros((len(plates), T), dtype=bool)
    for a, p in enumerate(plates):
        for b, t in enumerate(tiles):
            compat[a, b] = t.R.scl <= p.scl * (1 + _SLACK) and plates_intersect(t.R, p)
    return in_lac, compat


def size(
    tiles: Iterable[Tile],
    coeffs: CoefficientTable,
    kappa: int,
    exact_threshold: int = 64,
    sample_tops: int | None = None,
    seed: int = 0,
) -> float:
    """Supremum over lacunary trees in the collection of
    (|R_T|^{-1} sum_T F^2)^{1/2}.

    Exact for collections up to exact_threshold tiles; larger collections
    require sample_tops (random subset of candidate tops, biased downward).
    """
    tiles = sorted(tiles, key=_tile_key)
    if not tiles:
        return 0.0
    if len(tiles) > exact_threshold and sample_tops is None:
        raise ValueError(
            "collection above the exact-mode threshold; pass sample_tops for the sampled estimate"
        )
    tops = _top_points(tiles, kappa)
    if sample_tops is not None and len(tops) > sample_tops:
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(tops), size=sample_tops, replace=False)
        tops = [tops[i] for i in idx]
    plates = _plate_candidates(tiles)
    in_lac, compat = _size_matrices(tiles, kappa, tops, plates)
    F2 = np.array([coeffs.F(t) ** 2 for t in tiles])
    measures = np.array([p.measure for p in plates])
    # (top, plate) -> sum of F^2 over the corresponding maximal lacunary tree
    sums = in_lac.astype(float) @ (F2[:, None] * compat.T.astype(float))
    vals = sums / measures[None, :]
    return float(np.sqrt(np.max(vals))) if vals.size else 0.0


def tree_value(T: Tree, coeffs: CoefficientTable) -> float:
    s = sum(coeffs.F(t) ** 2 for t in T.tiles)
    return math.sqrt(s / T.measure)


def _tile_key(t: Tile):
    return (t.Q.j, t.Q.coords, t.R.L.j, t.R.L.coords, t.R.vertical)


# ---------------------------------------------------------------------------
# Density
# ---------------------------------------------------------------------------


def _tile_mass(t: Tile, fld: DirectionField, kappa: int) -> float:
    """Riemann sum of the plate-adapted bump over E_t."""
    sel = fld.mask & in_dir_support(t, kappa, fld.normals)
    if not np.any(sel):
        return 0.0
    vals = sy_bump(t.R, fld.points[sel], 10 * (t.n))
    return float(np.sum(vals)) * fld.cell_volume


def density(t: Tile, fld: DirectionField, peers: Iterable[Tile], kappa: int) -> float:
    """sup over peers t' >= t (including t itself) of the E_{t'} bump mass."""
    best = _tile_mass(t, fld, kappa)
    for tp in peers:
        if tp == t or not leq(t, tp):
            continue
        best = max(best, _tile_mass(tp, fld, kappa))
    return best


@dataclass
class DensityDecomposition:
    light: list
    trees: list
    report: dict

    def __iter__(self):
        return iter((self.light, self.trees))


def density_decompose(
    tiles: Iterable[Tile], fld: DirectionField, kappa: int
) -> DensityDecomposition:
    """Greedy split into a light part (density halved) and trees whose top
    measures are controlled by dense^{-1} |E| (constant measured, reported)."""
    remaining = sorted(tiles, key=_tile_key)
    if not remaining:
        return DensityDecomposition([], [], {"dense": 0.0, "sum_tops": 0.0, "constant": 0.0})
    masses = {t: _tile_mass(t, fld, kappa) for t in remaining}

    def dens(t, peers):
        return max(
            [masses[t]] + [masses[tp] for tp in peers if tp != t and leq(t, tp)]
        )

    delta = max(dens(t, remaining) for t in remaining)
    trees: list[Tree] = []
    if delta > 0:
        while True:
            heavy = [t for t in remaining if dens(t, remaining) > delta / 2]
            if not heavy:
                break
            # the witness peer realizing the sup of the heaviest tile
            t0 = max(heavy, key=lambda t: (t.R.scl, _tile_key(t)))
            witness = max(
                [t0] + [tp for tp in remaining if tp != t0 and leq(t0, tp)],
                key=lambda tp: masses[tp],
            )
            xi = witness.Q.corner + witness.Q.sidelength / math.pi
            T = maximal_tree(remaining, xi, witness.R, kappa)
            if not T.tiles:
                raise AssertionError("density selection produced an empty tree")
            trees.append(T)
            remaining = [t for t in remaining if t not in T.tiles]
            if not remaining:
                break
    sum_tops = sum(T.measure for T in trees)
    constant = sum_tops * delta / fld.measure_E if fld.measure_E > 0 and delta > 0 else 0.0
    return DensityDecomposition(
        light=remaining,
        trees=trees,
        report={"dense": delta, "sum_tops": sum_tops, "constant": constant},
    )


# ---------------------------------------------------------------------------
# Size decomposition
# ---------------------------------------------------------------------------


@dataclass
class SizeDecomposition:
    small: list
    trees: list  # full partition: selected trees plus their O(1) companions
    selected: list  # the greedily selected lacunary trees (strongly disjoint)
    report: dict

    def __iter__(self):
        return iter((self.small, self.trees))


def _enlarged_set(tiles: Sequence[Tile], T: Tree, K: float) -> list[Tile]:
    """E(T): tiles whose cube contains xi_T and whose plate meets K^2 R_T."""
    xi = np.asarray(T.xi)
    big = T.R_T.box().dilate(K**2)
    return [
        t
        for t in tiles
        if t.Q.contains_point(xi) and boxes_intersect(t.R.box(), big)
    ]


def _split_enlarged(leftover: list[Tile], xi, kappa: int) -> list[Tree]:
    """Sort the removed enlarged set into finitely many trees sharing xi."""
    out = []
    leftover = sorted(leftover, key=_tile_key)
    while leftover:
        top = max(leftover, key=lambda t: (t.R.scl, _tile_key(t)))
        T = maximal_tree(leftover, xi, top.R, kappa)
        if not T.tiles:
            raise AssertionError("enlarged-set split stalled")
        out.append(T)
        leftover = [t for t in leftover if t not in T.tiles]
    return out


def size_decompose(
    tiles: Iterable[Tile],
    coeffs: CoefficientTable,
    kappa: int,
    K: float = DEFAULT_K,
    sig_depth: int = 20,
    exact_threshold: int = 64,
    sample_tops: int | None = None,
) -> SizeDecomposition:
    """Greedy size decomposition: repeatedly select, among candidate tops
    whose maximal lacunary tree is heavy (sum F^2 > size^2/2 |R_T|), the one
    with the smallest signature of xi_T (lexicographic tie-break, flagged);
    remove the enlarged set E(T) around it; stop when the remainder's size
    has dropped by sqrt(2)."""
    remaining = sorted(tiles, key=_tile_key)
    sigma = size(remaining, coeffs, kappa, exact_threshold, sample_tops)
    report = {
        "input_size": sigma,
        "sum_tops": 0.0,
        "tie_break_used": False,
        "sampled": sample_tops is not None,
    }
    if sigma == 0.0:
        return SizeDecomposition(remaining, [], [], report)
    selected: list[Tree] = []
    all_trees: list[Tree] = []
    grid = remaining[0].Q.grid
    while remaining and size(remaining, coeffs, kappa, exact_threshold, sample_tops) > sigma / math.sqrt(2):
        tops = _top_points(remaining, kappa)
        plates = _plate_candidates(remaining)
        candidates = []
        for xi in tops:
            for p in plates:
                T = maximal_tree(remaining, xi, p, kappa, lacunary_only=True)
                if not T.tiles:
                    continue
                val2 = sum(coeffs.F(t) ** 2 for t in T.tiles)
                if val2 > (sigma**2 / 2) * T.measure:
                    candidates.append(T)
        if not candidates:
            # the remainder's size sup is attained only by trees below the
            # sigma^2/2 threshold; it is already within the stated bound
            break
        keys = [
            (signature(np.asarray(T.xi), grid, kappa, sig_depth), T.xi, _plate_sort_key(T.R_T))
            for T in candidates
        ]
        order = sorted(range(len(candidates)), key=lambda i: keys[i])
        best = candidates[order[0]]
        if len(order) > 1 and keys[order[0]][0] == keys[order[1]][0]:
            report["tie_break_used"] = True
        selected.append(best)
        all_trees.append(best)
        report["sum_tops"] += best.measure
        removed = _enlarged_set(remaining, best, K)
        leftover = [t for t in removed if t not in best.tiles]
        all_trees.extend(_split_enlarged(leftover, np.asarray(best.xi), kappa))
        remaining = [t for t in remaining if t not in removed]
    report["output_size"] = size(remaining, coeffs, kappa, exact_threshold, sample_tops)
    return SizeDecomposition(remaining, all_trees, selected, report)


def _plate_sort_key(p: Plate):
    return (p.scl, p.L.coords, p.vertical, p.beta)


# ---------------------------------------------------------------------------
# Strong disjointness
# ---------------------------------------------------------------------------


def verify_strongly_disjoint(family: Sequence[Tree], K: float = DEFAULT_K):
    """Check the strong-disjointness conditions plus pairwise disjointness of
    the marked boxes {R_t x Q_t-center}.  Returns (ok, counterexample)."""
    for T in family:
        if T.kind != "lacunary":
            return False, ("non-lacunary tree", T)
    for T in family:
        big = T.R_T.box().dilate(K**2)
        for Tp in family:
            if Tp is T:
                continue
            for t in T.tiles:
                for tp in Tp.tiles:
                    if t.Q.contains_cube(tp.Q):
                        continue
                    if tp.Q.kappa_center(T.kappa).contains_cube(t.Q) and boxes_intersect(
                        tp.R.box(), big
                    ):
                        return False, ("enlarged-plate overlap", t, tp)
    # marked boxes pairwise disjoint
    tiles = [(t, T.kappa) for T in family for t in T.tiles]
    for (a, ka), (b, kb) in itertools.combinations(tiles, 2):
        ca, cb = a.Q.kappa_center(ka), b.Q.kappa_center(kb)
        if ca.intersects(cb) and plates_intersect(a.R, b.R):
            return False, ("marked boxes overlap", a, b)
    return True, None


def model_form(tiles: Iterable[Tile], coeffs: CoefficientTable) -> float:
    return float(sum(coeffs.F(t) * coeffs.A(t) for t in tiles))


# ---------------------------------------------------------------------------
# Stopping decomposition
# ---------------------------------------------------------------------------


def stopping_decomposition(
    tiles: Iterable[Tile],
    coeffs: CoefficientTable,
    fld: DirectionField,
    kappa: int,
    K: float = DEFAULT_K,
    max_levels: int = 12,
) -> dict:
    """Alternate size and density halvings; report per-level top measures and
    the Carleson-type sum  sum_k 2^{-k} (sum_T |R_T|)."""
    remaining = sorted(tiles, key=_tile_key)
    levels = []
    carleson = 0.0
    for k in range(max_levels):
        if not remaining:
            break
        sd = size_decompose(remaining, coeffs, kappa, K)
        dd = density_decompose(sd.small, fld, kappa)
        tops = sd.report["sum_tops"] + dd.report["sum_tops"]
        levels.append(
            {
                "level": k,
                "size": sd.report["input_size"],
                "dense": dd.report["dense"],
                "trees": len(sd.trees) + len(dd.trees),
                "sum_tops": tops,
            }
        )
        carleson += 2.0**-k * tops
        remaining = dd.light
        if not sd.trees and not dd.trees:
            break
    return {"levels": levels, "carleson_sum": carleson, "residual": len(remaining)}


# ---------------------------------------------------------------------------
# Instance generation (for experiments and tests)
# ---------------------------------------------------------------------------


def generate_tile_collection(
    seed: int,
    count: int,
    d: int = 1,
    generations: tuple[int, int] = (-7, -5),
    spread: float = 0.25,
    spatial_extent: float = 200.0,
) -> list[Tile]:
    """Random tiles over one shared frequency grid and one spatial grid.

    Frequency cubes come from the standard triadic grid at the given
    generation range with centers within `spread` of the origin, so their
    lifts stay on the chart; plates take the matching scale and contain a
    random point of a bounded box.
    """
    rng = np.random.default_rng(seed)
    freq_grid = standard_spatial_grid(d)
    spatial = standard_spatial_grid(d)
    tiles = []
    seen = set()
    attempts = 0
    while len(tiles) < count and attempts < 100 * count:
        attempts += 1
        jq = int(rng.integers(generations[0], generations[1] + 1))
        y = rng.uniform(-spread, spread, size=d)
        Q = freq_grid.cube_containing(y, jq)
        k = -jq
        v = chart_lift(Q.center)
        z = rng.uniform(-spatial_extent, spatial_extent, size=d + 1)
        from .tiling import _rotation_to

        w = _rotation_to(v).T @ z
        L = spatial.cube_containing(w[:-1], k)
        t = Tile(R=Plate(beta=tuple(v), L=L, vertical=math.floor(w[-1])), Q=Q)
        if t not in seen:
            seen.add(t)
            tiles.append(t)
    return tiles
