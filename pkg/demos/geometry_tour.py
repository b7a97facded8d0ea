"""A short tour of the hyperplane geometry layer.

Walks through the distance/rotation identity for nearby hyperplanes, then
checks the closed-form projection derivative against finite differences.
Run with: python3 demos/geometry_tour.py
"""

import numpy as np

from grsio.grassmann import (
    Subspace,
    dist,
    operator_norm,
    projection_derivative,
    projection_matrix,
    rotation_between,
    standard_frame,
    tilted_subspace,
)
from grsio.tiling import chart_lift


def main():
    rng = np.random.default_rng(0)

    print("== rotations between nearby hyperplanes ==")
    for n in (2, 3, 4):
        sigma = Subspace(chart_lift(rng.uniform(-0.2, 0.2, size=n - 1)))
        tau = Subspace(chart_lift(rng.uniform(-0.2, 0.2, size=n - 1)))
        O = rotation_between(sigma, tau).matrix
        gap = abs(operator_norm(O - np.eye(n)) - dist(sigma, tau))
        print(f"  n={n}:  dist = {dist(sigma, tau):.6f}   ||O - Id|| - dist = {gap:.2e}")
        print(f"         |O v_sigma - v_tau| = {np.linalg.norm(O @ sigma.normal - tau.normal):.2e}")

    print()
    print("== projection derivative vs central differences ==")
    frame = standard_frame(Subspace(chart_lift([0.1, -0.05])))
    xi = rng.standard_normal(3)
    exact = projection_derivative(frame, 1) @ xi
    for h in (1e-2, 1e-3, 1e-4):
        plus = projection_matrix(tilted_subspace(frame, 1, h)[0]) @ xi
        minus = projection_matrix(tilted_subspace(frame, 1, -h)[0]) @ xi
        err = np.max(np.abs((plus - minus) / (2 * h) - exact))
        print(f"  h = {h:.0e}:  fd error = {err:.3e}")
    print("  (quadratic decay confirms the closed form)")


if __name__ == "__main__":
    main()
