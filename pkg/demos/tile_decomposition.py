"""Size and density decompositions of a random tile collection.

Generates a few dozen random tiles, runs the two greedy stopping-time
decompositions, and prints the halving certificates that the selection
lemmas promise: size drops by sqrt(2), density by 2, and the selected trees
are strongly disjoint.

Run with: python3 demos/tile_decomposition.py
"""

import math

import numpy as np

from grsio import trees as tr
from grsio.tiling import chart_lift, default_kappa


def lattice_field(rng, extent=15.0, step=0.5):
    xs = np.arange(-extent, extent, step) + step / 2
    pts = np.stack(np.meshgrid(xs, xs, indexing="ij"), axis=-1).reshape(-1, 2)
    ys = rng.uniform(-0.3, 0.3, size=len(pts))
    normals = np.array([chart_lift([y]) for y in ys])
    return tr.DirectionField(
        points=pts, normals=normals, mask=np.ones(len(pts), bool),
        cell_volume=step**2, max_tilt=1.0,
    )


def main():
    rng = np.random.default_rng(3)
    kappa = default_kappa(1)
    tiles = tr.generate_tile_collection(3, 24, generations=(-2, 0), spatial_extent=10.0)
    coeffs = tr.CoefficientTable(
        {t: (float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.1, 1.0))) for t in tiles},
        M=50,
    )
    fld = lattice_field(rng)

    print(f"{len(tiles)} tiles")
    sd = tr.size_decompose(tiles, coeffs, kappa)
    s_in = tr.size(tiles, coeffs, kappa)
    s_out = tr.size(sd.small, coeffs, kappa) if sd.small else 0.0
    print(f"size:    {s_in:.4f} -> {s_out:.4f}  (target <= {s_in / math.sqrt(2):.4f};"
          f" {len(sd.trees)} trees removed)")
    ok, _ = tr.verify_strongly_disjoint(sd.selected)
    print(f"selected trees strongly disjoint: {ok}")

    dd = tr.density_decompose(tiles, fld, kappa)
    d_in = max((tr.density(t, fld, tiles, kappa) for t in tiles), default=0.0)
    d_out = max((tr.density(t, fld, dd.light, kappa) for t in dd.light), default=0.0)
    print(f"density: {d_in:.4f} -> {d_out:.4f}  (target <= {d_in / 2:.4f};"
          f" {len(dd.trees)} trees removed)")

    stop = tr.stopping_decomposition(tiles, coeffs, fld, kappa)
    print(f"stopping decomposition: {len(stop['levels'])} levels,"
          f" Carleson sum {stop['carleson_sum']:.3f}")


if __name__ == "__main__":
    main()
