"""Tests for tile trees: order, signature, size/density and decompositions."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grsio import trees as tr
from grsio.tiling import (
    Plate,
    Tile,
    TriadicCube,
    chart_lift,
    default_kappa,
    dir_support_membership,
    plates_intersect,
    standard_spatial_grid,
    _rotation_to,
)

KAPPA = default_kappa(1)
GRID = standard_spatial_grid(1)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def make_tile(jq: int, y: float, zx: float, vert: int, grid=GRID) -> Tile:
    """Tile with frequency cube at generation jq containing y and plate at the
    matching scale near horizontal coordinate zx."""
    Q = grid.cube_containing([y], jq)
    v = chart_lift(Q.center)
    L = grid.cube_containing([zx], -jq)
    return Tile(R=Plate(beta=tuple(v), L=L, vertical=vert), Q=Q)


def mid_scale_instance(seed: int, count: int):
    """Random tiles at scl in {3, 9} with plates in a +-12 window."""
    rng = np.random.default_rng(seed)
    tiles, seen = [], set()
    while len(tiles) < count:
        jq = int(rng.integers(-2, 0))
        y = float(rng.uniform(-0.3, 0.3))
        Q = GRID.cube_containing([y], jq)
        v = chart_lift(Q.center)
        z = rng.uniform(-12, 12, size=2)
        w = _rotation_to(v).T @ z
        L = GRID.cube_containing(w[:-1], -jq)
        t = Tile(R=Plate(beta=tuple(v), L=L, vertical=math.floor(w[-1])), Q=Q)
        if t not in seen:
            seen.add(t)
            tiles.append(t)
    return tiles


def lattice_field(seed: int = 1, frac_masked: float = 0.5):
    xs = np.arange(-15, 15, 0.5)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    rng = np.random.default_rng(seed)
    ys = rng.uniform(-0.3, 0.3, size=len(pts))
    normals = np.stack([ys, np.sqrt(1 - ys**2)], axis=1)
    mask = rng.random(len(pts)) < frac_masked
    return tr.DirectionField(
        points=pts, normals=normals, mask=mask, cell_volume=0.25, max_tilt=1.0
    )


def random_coeffs(tiles, seed=0, M=20):
    rng = np.random.default_rng(seed)
    return tr.CoefficientTable(
        {t: (float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.1, 1.0))) for t in tiles},
        M=M,
    )


# ---------------------------------------------------------------------------
# order relation
# ---------------------------------------------------------------------------


class TestOrder:
    def test_reflexive_and_nested(self):
        t1 = make_tile(-1, 0.25, 0.0, 0)
        t2 = make_tile(-2, 0.25, 0.0, 0)
        assert tr.leq(t1, t1)
        assert tr.leq(t1, t2)  # Q2 inside Q1, plates share the origin region
        assert not tr.leq(t2, t1)

    def test_not_transitive_witness_exists(self):
        """Search a small grid of plate placements for t1 <= t2 <= t3 with
        t1 </= t3; the order is genuinely non-transitive."""
        Q1 = GRID.cube_containing([0.25], 0)
        Q2 = GRID.cube_containing([0.25], -1)
        Q3 = GRID.cube_containing([0.25], -2)
        b1, b2, b3 = (tuple(chart_lift(Q.center)) for Q in (Q1, Q2, Q3))
        t1 = Tile(R=Plate(beta=b1, L=GRID.cube_containing([0.0], 0), vertical=0), Q=Q1)
        found = None
        for c2, v2, c3, v3 in itertools.product(
            range(-2, 3), range(-2, 3), range(-2, 3), range(-4, 5)
        ):
            t2 = Tile(R=Plate(beta=b2, L=TriadicCube(GRID, 1, (c2,)), vertical=v2), Q=Q2)
            t3 = Tile(R=Plate(beta=b3, L=TriadicCube(GRID, 2, (c3,)), vertical=v3), Q=Q3)
            if tr.leq(t1, t2) and tr.leq(t2, t3) and not tr.leq(t1, t3):
                found = (t2, t3)
                break
        assert found is not None


# ---------------------------------------------------------------------------
# signature
# ---------------------------------------------------------------------------


def oracle_signature_1d(xi: Fraction, depth: int, kappa: int) -> Fraction:
    """Independent digit-walk: a_j = 0 exactly when triadic digits j+1..j+kappa
    of xi are all equal to 1 (the base-3 spelling of the center offset)."""
    digits = []
    frac = xi - math.floor(xi)
    for _ in range(depth + kappa):
        frac *= 3
        d = math.floor(frac)
        digits.append(d)
        frac -= d
    sig = Fraction(0)
    for j in range(1, depth + 1):
        window = digits[j : j + kappa]
        if not all(d == 1 for d in window):
            sig += Fraction(1, 3**j)
    return sig


class TestSignature:
    def test_all_center_point(self):
        # 1/2 = 0.111..._3 sits in every kappa-center
        assert tr.signature([0.5], GRID, KAPPA) == 0.0

    def test_never_center_point(self):
        # 1/4 = 0.0202..._3 never spells a run of ones
        sig = tr.signature([0.25], GRID, KAPPA, depth=20)
        assert abs(sig - 0.5) <= 3.0**-20

    @given(st.integers(min_value=1, max_value=3**12 - 1))
    @settings(max_examples=60, deadline=None)
    def test_matches_digit_oracle(self, num):
        xi = Fraction(num, 3**12) + Fraction(1, 2 * 3**13)  # keep off boundaries
        depth = 10
        expected = float(oracle_signature_1d(xi, depth, KAPPA))
        got = tr.signature([float(xi)], GRID, KAPPA, depth=depth)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_triadic_input_is_perturbed(self):
        _, flag = tr.ensure_nontriadic([1.0 / 3.0], GRID, depth=10)
        assert flag
        _, flag = tr.ensure_nontriadic([0.25], GRID, depth=10)
        assert not flag
        # perturbed signature is still a number in [0, 1/2]
        sig = tr.signature([1.0 / 3.0], GRID, KAPPA, depth=10)
        assert 0.0 <= sig <= 0.5


# ---------------------------------------------------------------------------
# direction support and center membership
# ---------------------------------------------------------------------------


class TestSupports:
    def test_dir_support_matches_scalar_oracle(self):
        t = make_tile(-1, 0.25, 0.0, 0)
        rng = np.random.default_rng(5)
        ys = rng.uniform(0.2, 0.35, size=200)  # straddles the cube [2/9, 3/9)
        normals = np.stack([ys, np.sqrt(1 - ys**2)], axis=1)
        got = tr.in_dir_support(t, KAPPA, normals)
        want = np.array(
            [dir_support_membership(t, KAPPA, v) is not None for v in normals]
        )
        assert np.array_equal(got, want)
        assert got.any() and not got.all()

    def test_center_membership(self):
        Q = GRID.cube_containing([0.25], 0)
        assert tr.in_kappa_center(Q, KAPPA, [0.5])
        assert not tr.in_kappa_center(Q, KAPPA, [0.25])
        assert not tr.in_kappa_center(Q, KAPPA, [1.5])  # outside Q entirely

    def test_nested_supports_give_nested_sets(self):
        """If the cube of t' sits inside a peripheral cell of Q_t, membership
        in the direction support of t' implies membership for t."""
        t = make_tile(-1, 0.25, 0.0, 0)
        # pick a child of an explicitly peripheral cell: offset 0 has maximal gap
        Qp = t.Q.child(KAPPA, (0,)).child(1, (1,))
        v = chart_lift(Qp.center)
        L = GRID.cube_containing([0.0], -Qp.j)
        tp = Tile(R=Plate(beta=tuple(v), L=L, vertical=0), Q=Qp)
        rng = np.random.default_rng(11)
        ys = rng.uniform(Qp.corner[0] - Qp.sidelength, Qp.corner[0] + 2 * Qp.sidelength, 400)
        normals = np.stack([ys, np.sqrt(1 - ys**2)], axis=1)
        inner = tr.in_dir_support(tp, KAPPA, normals)
        outer = tr.in_dir_support(t, KAPPA, normals)
        assert inner.any()
        assert np.all(outer[inner])


# ---------------------------------------------------------------------------
# trees
# ---------------------------------------------------------------------------


class TestTree:
    def test_kinds(self):
        lac_tiles = [make_tile(j, 0.25, 0.0, 0) for j in (-1, -2)]
        top = max(lac_tiles, key=lambda t: t.R.scl)
        T = tr.maximal_tree(lac_tiles, [0.25], top.R, KAPPA)
        assert T.kind == "lacunary" and len(T.tiles) == 2

        ov_tiles = [make_tile(j, 0.5, 0.0, 0) for j in (-1, -2)]
        top = max(ov_tiles, key=lambda t: t.R.scl)
        T = tr.maximal_tree(ov_tiles, [0.5], top.R, KAPPA)
        assert T.kind == "overlapping" and len(T.tiles) == 2

        mix = lac_tiles[:1] + ov_tiles[:1]  # both cubes contain 0.5? no: filter
        T = tr.maximal_tree(mix, [0.5], top.R, KAPPA)
        assert T.kind in {"overlapping", "mixed"}

    def test_validation(self):
        t = make_tile(-1, 0.25, 0.0, 0)
        with pytest.raises(ValueError, match="outside"):
            tr.Tree(tiles=frozenset([t]), xi=(5.0,), R_T=t.R, kappa=KAPPA)
        small_top = make_tile(0, 0.25, 0.0, 0)  # scl 1 < scl 3 of t
        with pytest.raises(ValueError, match="scale"):
            tr.Tree(tiles=frozenset([t]), xi=(0.25,), R_T=small_top.R, kappa=KAPPA)

    def test_lacunary_filter(self):
        tiles = [make_tile(-1, 0.5, 0.0, 0), make_tile(-2, 0.5, 0.0, 0)]
        T = tr.maximal_tree(tiles, [0.5], tiles[1].R, KAPPA, lacunary_only=True)
        assert len(T.tiles) == 0  # 0.5 is in every center


class TestCoefficients:
    def test_rejects_negative(self):
        t = make_tile(-1, 0.25, 0.0, 0)
        with pytest.raises(ValueError):
            tr.CoefficientTable({t: (-1.0, 0.0)}, M=20)

    def test_model_form(self):
        tiles = [make_tile(-1, 0.25, 0.0, 0), make_tile(-2, 0.25, 1.0, 0)]
        ct = tr.CoefficientTable({tiles[0]: (2.0, 3.0), tiles[1]: (1.0, 5.0)}, M=20)
        assert tr.model_form(tiles, ct) == pytest.approx(11.0)


# ---------------------------------------------------------------------------
# size
# ---------------------------------------------------------------------------


def oracle_size_1d(tiles, coeffs, kappa):
    """Brute force over all nonempty subsets: a subset is a lacunary tree if
    the interval 'intersection of cubes minus union of centers' is nonempty
    and some candidate plate dominates every member plate."""
    plates = tr._plate_candidates(tiles)
    best = 0.0
    for r in range(1, len(tiles) + 1):
        for subset in itertools.combinations(tiles, r):
            lo = max(t.Q.corner[0] for t in subset)
            hi = min(t.Q.corner[0] + t.Q.sidelength for t in subset)
            if hi <= lo:
                continue
            pieces = [(lo, hi)]
            for t in subset:
                C = t.Q.kappa_center(kappa)
                a, b = C.corner[0], C.corner[0] + C.sidelength
                pieces = [
                    p
                    for seg in pieces
                    for p in ((seg[0], min(seg[1], a)), (max(seg[0], b), seg[1]))
                    if p[1] > p[0]
                ]
            if not pieces:
                continue
            for p in plates:
                if all(
                    t.R.scl <= p.scl * (1 + 1e-9) and plates_intersect(t.R, p)
                    for t in subset
                ):
                    val = math.sqrt(sum(coeffs.F(t) ** 2 for t in subset) / p.measure)
                    best = max(best, val)
    return best


class TestSize:
    def test_single_tile(self):
        t = make_tile(-1, 0.25, 0.0, 0)
        ct = tr.CoefficientTable({t: (0.7, 0.0)}, M=20)
        assert tr.size([t], ct, KAPPA) == pytest.approx(0.7 / math.sqrt(t.R.measure))

    def test_empty(self):
        assert tr.size([], tr.CoefficientTable({}, M=20), KAPPA) == 0.0

    def test_eight_tiles_vs_bruteforce(self):
        tiles = mid_scale_instance(21, 8)
        ct = random_coeffs(tiles, seed=2)
        exact = tr.size(tiles, ct, KAPPA)
        assert exact == pytest.approx(oracle_size_1d(tiles, ct, KAPPA), rel=1e-12)

    def test_monotone_under_inclusion(self):
        tiles = mid_scale_instance(9, 12)
        ct = random_coeffs(tiles, seed=3)
        full = tr.size(tiles, ct, KAPPA)
        for k in (4, 8, 11):
            assert tr.size(tiles[:k], ct, KAPPA) <= full + 1e-12

    def test_threshold_and_sampling(self):
        tiles = mid_scale_instance(4, 10)
        ct = random_coeffs(tiles, seed=4)
        with pytest.raises(ValueError, match="threshold"):
            tr.size(tiles, ct, KAPPA, exact_threshold=4)
        exact = tr.size(tiles, ct, KAPPA)
        sampled = tr.size(tiles, ct, KAPPA, exact_threshold=4, sample_tops=6)
        assert sampled <= exact + 1e-12


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------


class TestDensity:
    def _unit_tile(self):
        return make_tile(0, 0.25, 0.0, 0)

    def _full_field(self, y=0.25):
        xs = np.arange(-20, 20, 0.25)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=1)
        v = chart_lift([y])
        normals = np.tile(v, (len(pts), 1))
        return tr.DirectionField(
            points=pts,
            normals=normals,
            mask=np.ones(len(pts), bool),
            cell_volume=0.25**2,
            max_tilt=1.0,
        )

    def test_empty_E_is_zero(self):
        t = self._unit_tile()
        fld = self._full_field()
        empty = tr.DirectionField(
            points=fld.points,
            normals=fld.normals,
            mask=np.zeros(len(fld.points), bool),
            cell_volume=fld.cell_volume,
            max_tilt=1.0,
        )
        assert tr.density(t, empty, [t], KAPPA) == 0.0

    def test_constant_field_near_one(self):
        t = self._unit_tile()
        d = tr.density(t, self._full_field(), [t], KAPPA)
        assert 0.9 <= d <= 1.0 + 1e-2  # unit-mass bump, Riemann-summed

    def test_monotone_in_E(self):
        t = self._unit_tile()
        fld = self._full_field()
        rng = np.random.default_rng(0)
        half_mask = rng.random(len(fld.points)) < 0.5
        half = tr.DirectionField(
            points=fld.points,
            normals=fld.normals,
            mask=half_mask,
            cell_volume=fld.cell_volume,
            max_tilt=1.0,
        )
        assert tr.density(t, half, [t], KAPPA) <= tr.density(t, fld, [t], KAPPA) + 1e-12

    def test_sup_includes_self(self):
        t = self._unit_tile()
        d_alone = tr.density(t, self._full_field(), [], KAPPA)
        assert d_alone > 0.5


# ---------------------------------------------------------------------------
# decompositions
# ---------------------------------------------------------------------------


class TestDensityDecompose:
    def test_halving_partition_and_constant(self):
        tiles = mid_scale_instance(7, 24)
        fld = lattice_field(1)
        dd = tr.density_decompose(tiles, fld, KAPPA)
        # exact partition
        covered = set(dd.light) | {u for T in dd.trees for u in T.tiles}
        assert covered == set(tiles)
        assert sum(len(T.tiles) for T in dd.trees) + len(dd.light) == len(tiles)
        # halving on the light part
        delta = dd.report["dense"]
        for t in dd.light:
            assert tr.density(t, fld, dd.light, KAPPA) <= delta / 2 + 1e-12
        # top measures controlled; constant measured and reported
        assert dd.report["sum_tops"] == pytest.approx(
            sum(T.measure for T in dd.trees)
        )
        assert dd.report["constant"] >= 0.0

    def test_empty_input(self):
        light, trees = tr.density_decompose([], lattice_field(), KAPPA)
        assert light == [] and trees == []


class TestSizeDecompose:
    def test_halving_partition_disjointness(self):
        tiles = mid_scale_instance(3, 20)
        ct = random_coeffs(tiles, seed=1)
        sd = tr.size_decompose(tiles, ct, KAPPA)
        sigma = sd.report["input_size"]
        assert sd.report["output_size"] <= sigma / math.sqrt(2) + 1e-12
        covered = set(sd.small) | {u for T in sd.trees for u in T.tiles}
        assert covered == set(tiles)
        assert sum(len(T.tiles) for T in sd.trees) + len(sd.small) == len(tiles)
        ok, cex = tr.verify_strongly_disjoint(sd.selected)
        assert ok, cex
        for T in sd.selected:
            assert T.kind == "lacunary"

    def test_signature_order_on_outputs(self):
        """Across selected trees, a cube sitting inside another tree's center
        forces the signature order of the tops."""
        tiles = mid_scale_instance(13, 24)
        ct = random_coeffs(tiles, seed=5)
        sd = tr.size_decompose(tiles, ct, KAPPA)
        for T, Tp in itertools.permutations(sd.selected, 2):
            for t in T.tiles:
                for tp in Tp.tiles:
                    if tp.Q.kappa_center(KAPPA).contains_cube(t.Q):
                        sT = tr.signature(np.asarray(T.xi), GRID, KAPPA)
                        sTp = tr.signature(np.asarray(Tp.xi), GRID, KAPPA)
                        assert sT <= sTp + 1e-15

    def test_zero_coefficients(self):
        tiles = mid_scale_instance(2, 6)
        ct = tr.CoefficientTable({t: (0.0, 0.0) for t in tiles}, M=20)
        sd = tr.size_decompose(tiles, ct, KAPPA)
        assert sd.small == sorted(tiles, key=tr._tile_key) and sd.trees == []


class TestStronglyDisjoint:
    def test_detects_marked_box_overlap(self):
        # two single-tile "trees" built over the same tile
        t = make_tile(-1, 0.25, 0.0, 0)
        T1 = tr.maximal_tree([t], [0.25], t.R, KAPPA)
        T2 = tr.maximal_tree([t], [0.26], t.R, KAPPA)
        ok, cex = tr.verify_strongly_disjoint([T1, T2])
        assert not ok and cex is not None

    def test_rejects_non_lacunary(self):
        t = make_tile(-1, 0.5, 0.0, 0)
        T = tr.maximal_tree([t], [0.5], t.R, KAPPA)
        assert T.kind == "overlapping"
        ok, cex = tr.verify_strongly_disjoint([T])
        assert not ok and cex[0] == "non-lacunary tree"

    def test_accepts_separated_trees(self):
        t1 = make_tile(-1, 0.25, 0.0, 0)
        t2 = make_tile(-1, -0.25, 2000.0, 500)
        T1 = tr.maximal_tree([t1], [0.25], t1.R, KAPPA)
        T2 = tr.maximal_tree([t2], [-0.25], t2.R, KAPPA)
        ok, _ = tr.verify_strongly_disjoint([T1, T2])
        assert ok


class TestStopping:
    def test_levels_and_carleson_sum(self):
        tiles = mid_scale_instance(7, 18)
        ct = random_coeffs(tiles, seed=6)
        fld = lattice_field(2)
        rep = tr.stopping_decomposition(tiles, ct, fld, KAPPA, max_levels=6)
        assert rep["residual"] == 0 or rep["levels"]
        sizes = [lv["size"] for lv in rep["levels"]]
        assert all(b <= a + 1e-12 for a, b in zip(sizes, sizes[1:]))
        assert np.isfinite(rep["carleson_sum"]) and rep["carleson_sum"] >= 0.0


class TestGeneration:
    def test_shared_grids_and_uniqueness(self):
        tiles = tr.generate_tile_collection(seed=0, count=30, d=1)
        assert len(tiles) == 30 and len(set(tiles)) == 30
        grids = {t.Q.grid for t in tiles}
        assert len(grids) == 1
        for t in tiles:
            assert 1.0 - 1e-9 <= t.R.scl * t.Q.sidelength < 3.0 * (1 + 1e-9)
