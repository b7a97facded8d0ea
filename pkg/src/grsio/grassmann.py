"""
Geometry of oriented hyperplanes in R^n.

An oriented codimension-1 subspace sigma of R^n is identified with its unit
normal v_sigma on the sphere S^d (d = n-1).  The distance used throughout is
the chordal one,

    dist(sigma, tau) = |v_sigma - v_tau|,

which is comparable to the projection distance sup_w |P_sigma w - P_tau w|.

The module provides:

- the minimal rotation carrying sigma to tau (a two-dimensional rotation in
  the plane spanned by the two normals, identity on sigma ∩ tau), whose
  deviation from the identity in operator norm equals dist(sigma, tau)
  exactly;
- the canonical rotation O_sigma flattening sigma onto R^{n-1} x {0} with
  O_sigma v_sigma = e_n;
- tangent generators of the sphere of normals (skew-symmetric matrices) and
  the closed-form derivative of the orthogonal projection P_sigma along
  tangent directions;
- the closed-form directional derivative of the rotation family
  sigma -> R_sigma = rotation_between(rho, sigma) for a fixed reference rho.

All objects are immutable values and all functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "Subspace",
    "Rotation",
    "TangentFrame",
    "dist",
    "dist_prime",
    "rotation_between",
    "canonical_rotation",
    "standard_frame",
    "tangent_generator",
    "projection_derivative",
    "rotation_derivative",
    "varpi",
    "operator_norm",
    "projection_matrix",
]

_UNIT_TOL = 1e-12
_ORTHO_TOL = 1e-10
# Reject near-antipodal configurations instead of regularizing them: the
# operators downstream only ever see small neighborhoods of e_n^perp.
_ANTIPODAL_CUTOFF = 2.0 * (1.0 - 1e-8)


def _as_locked(a: NDArray[np.floating]) -> NDArray[np.float64]:
    out = np.array(a, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Subspace:
    """Oriented hyperplane of R^n, stored via its unit normal.

    Orientation matters: normals v and -v give distinct subspaces.
    """

    normal: NDArray[np.float64]

    def __post_init__(self) -> None:
        v = _as_locked(np.asarray(self.normal, dtype=np.float64).ravel())
        if v.size < 2:
            raise ValueError("ambient dimension must be at least 2")
        nrm = float(np.linalg.norm(v))
        if abs(nrm - 1.0) > _UNIT_TOL:
            raise ValueError(f"normal must be a unit vector, got |v| = {nrm!r}")
        object.__setattr__(self, "normal", v)

    @property
    def n(self) -> int:
        """Ambient dimension."""
        return self.normal.size

    @property
    def d(self) -> int:
        """Dimension of the subspace itself (= n - 1)."""
        return self.normal.size - 1

    @staticmethod
    def from_normal(v: NDArray[np.floating]) -> "Subspace":
        """Build a Subspace from a not-necessarily-normalized normal vector."""
        v = np.asarray(v, dtype=np.float64).ravel()
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ValueError("zero vector cannot be a normal")
        return Subspace(v / nrm)

    @staticmethod
    def horizontal(n: int) -> "Subspace":
        """The reference hyperplane e_n^perp = R^{n-1} x {0}."""
        v = np.zeros(n)
        v[-1] = 1.0
        return Subspace(v)


@dataclass(frozen=True)
class Rotation:
    """Element of SO(n) stored as an n x n matrix."""

    matrix: NDArray[np.float64]

    def __post_init__(self) -> None:
        m = _as_locked(np.asarray(self.matrix, dtype=np.float64))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("rotation matrix must be square")
        err = np.max(np.abs(m.T @ m - np.eye(m.shape[0])))
        if err > _ORTHO_TOL:
            raise ValueError(f"matrix is not orthogonal (max defect {err:.3e})")
        det = np.linalg.det(m)
        if abs(det - 1.0) > _ORTHO_TOL:
            raise ValueError(f"matrix has determinant {det!r}, expected +1")
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def apply(self, x: NDArray[np.floating]) -> NDArray[np.float64]:
        return self.matrix @ np.asarray(x, dtype=np.float64)

    def inverse(self) -> "Rotation":
        return Rotation(self.matrix.T)

    @staticmethod
    def identity(n: int) -> "Rotation":
        return Rotation(np.eye(n))


@dataclass(frozen=True)
class TangentFrame:
    """Orthonormal basis v_1, ..., v_d of a hyperplane sigma.

    vectors has shape (d, n); row j is the basis vector v_j.
    """

    base: Subspace
    vectors: NDArray[np.float64]

    def __post_init__(self) -> None:
        vecs = _as_locked(np.atleast_2d(np.asarray(self.vectors, dtype=np.float64)))
        d, n = vecs.shape
        if (d, n) != (self.base.d, self.base.n):
            raise ValueError(f"expected {self.base.d} vectors of length {self.base.n}")
        gram_err = np.max(np.abs(vecs @ vecs.T - np.eye(d)))
        if gram_err > _ORTHO_TOL:
            raise ValueError(f"frame is not orthonormal (max defect {gram_err:.3e})")
        normal_err = np.max(np.abs(vecs @ self.base.normal))
        if normal_err > _ORTHO_TOL:
            raise ValueError(f"frame is not tangent to base (max defect {normal_err:.3e})")
        object.__setattr__(self, "vectors", vecs)


def _check_same_dim(sigma: Subspace, tau: Subspace) -> None:
    if sigma.n != tau.n:
        raise ValueError(f"dimension mismatch: {sigma.n} vs {tau.n}")


def dist(sigma: Subspace, tau: Subspace) -> float:
    """Chordal distance |v_sigma - v_tau| between oriented hyperplanes."""
    _check_same_dim(sigma, tau)
    return float(np.linalg.norm(sigma.normal - tau.normal))


def dist_prime(
    sigma: Subspace,
    tau: Subspace,
    num_samples: int = 1000,
    seed: int = 0,
) -> float:
    """Projection distance sup_w |P_sigma w - P_tau w| over a sphere sample.

    The supremum over the unit sphere equals |sin(angle between normals)|;
    this sampled version exists as an independent cross-check of that fact
    and of the comparability with dist().
    """
    _check_same_dim(sigma, tau)
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((num_samples, sigma.n))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    p_sigma = w - np.outer(w @ sigma.normal, sigma.normal)
    p_tau = w - np.outer(w @ tau.normal, tau.normal)
    return float(np.max(np.linalg.norm(p_sigma - p_tau, axis=1)))


def projection_matrix(sigma: Subspace) -> NDArray[np.float64]:
    """Orthogonal projection of R^n onto sigma: Id - v v^T."""
    v = sigma.normal
    return np.eye(sigma.n) - np.outer(v, v)


def rotation_between(sigma: Subspace, tau: Subspace) -> Rotation:
    """Minimal rotation O with O sigma = tau and O v_sigma = v_tau.

    O acts as the identity on sigma ∩ tau and rotates the plane
    span{v_sigma, v_tau} by the angle between the normals.  Its operator-norm
    deviation from the identity equals dist(sigma, tau) exactly:

        ||O - Id|| = sqrt(2) sqrt(1 - <v_sigma, v_tau>) = |v_sigma - v_tau|.

    Raises ValueError for dimension mismatch or (near-)antipodal normals,
    where the construction degenerates.
    """
    _check_same_dim(sigma, tau)
    v_s, v_t = sigma.normal, tau.normal
    if dist(sigma, tau) > _ANTIPODAL_CUTOFF:
        raise ValueError("normals too far apart: minimal rotation is ill-conditioned")
    cos_theta = float(np.clip(v_s @ v_t, -1.0, 1.0))
    theta = np.arccos(cos_theta)
    if theta == 0.0:
        return Rotation.identity(sigma.n)
    # Unit vector u in sigma ∩ span{v_sigma, v_tau} fixed by the convention
    # v_tau = -(sin theta) u + (cos theta) v_sigma.
    u = (cos_theta * v_s - v_t) / np.sin(theta)
    # Rotation by theta in the (u, v_sigma)-plane, identity elsewhere.
    c, s = cos_theta, np.sin(theta)
    m = (
        np.eye(sigma.n)
        + (c - 1.0) * (np.outer(u, u) + np.outer(v_s, v_s))
        + s * (np.outer(v_s, u) - np.outer(u, v_s))
    )
    return Rotation(m)


def canonical_rotation(sigma: Subspace) -> Rotation:
    """The canonical O_sigma with O_sigma sigma = R^{n-1} x {0}, O_sigma v_sigma = e_n."""
    return rotation_between(sigma, Subspace.horizontal(sigma.n))


def standard_frame(sigma: Subspace) -> TangentFrame:
    """Orthonormal basis of sigma obtained from e_1..e_{n-1} via O_sigma^{-1}."""
    o_inv = canonical_rotation(sigma).matrix.T
    return TangentFrame(base=sigma, vectors=o_inv[:, :-1].T)


def tangent_generator(frame: TangentFrame, j: int) -> NDArray[np.float64]:
    """Skew-symmetric generator X_j of the rotation tilting v_j toward v_sigma.

    Defining identities: X v_j = v_sigma, X v_k = 0 for k != j,
    X v_sigma = -v_j.  Explicitly X = v_sigma v_j^T - v_j v_sigma^T.
    """
    d = frame.vectors.shape[0]
    if not 1 <= j <= d:
        raise IndexError(f"tangent index {j} out of range 1..{d}")
    vj = frame.vectors[j - 1]
    vs = frame.base.normal
    return np.outer(vs, vj) - np.outer(vj, vs)


def projection_derivative(frame: TangentFrame, j: int) -> NDArray[np.float64]:
    """Derivative of sigma -> P_sigma along the j-th tangent direction.

    Along the curve sigma(t; j) = span{v_1, ..., (cos t) v_j + (sin t) v_sigma,
    ..., v_d} the projection satisfies

        d/dt P_{sigma(t;j)} xi |_{t=0} = <xi, v_j> v_sigma + <xi, v_sigma> v_j,

    i.e. the symmetric matrix v_sigma v_j^T + v_j v_sigma^T.  It agrees with
    the skew generator of tangent_generator() on xi ∈ sigma but differs by the
    sign of the v_sigma-component in general.
    """
    d = frame.vectors.shape[0]
    if not 1 <= j <= d:
        raise IndexError(f"tangent index {j} out of range 1..{d}")
    vj = frame.vectors[j - 1]
    vs = frame.base.normal
    return np.outer(vs, vj) + np.outer(vj, vs)


def tilted_subspace(frame: TangentFrame, j: int, t: float) -> tuple[Subspace, TangentFrame]:
    """The curve sigma(t; j): replace v_j by (cos t) v_j + (sin t) v_sigma.

    Returns the tilted subspace together with the transported frame.  The
    normal rotates oppositely: v(t) = -(sin t) v_j + (cos t) v_sigma.
    """
    d = frame.vectors.shape[0]
    if not 1 <= j <= d:
        raise IndexError(f"tangent index {j} out of range 1..{d}")
    vj = frame.vectors[j - 1]
    vs = frame.base.normal
    vecs = np.array(frame.vectors)
    vecs[j - 1] = np.cos(t) * vj + np.sin(t) * vs
    new_normal = -np.sin(t) * vj + np.cos(t) * vs
    sub = Subspace.from_normal(new_normal)
    return sub, TangentFrame(base=sub, vectors=vecs)


def varpi(beta: float) -> float:
    """The bounded function (cos b - 1)/sin b = -tan(b/2).

    The quotient form suffers catastrophic cancellation as b -> 0, so the
    tangent half-angle form is used there.
    """
    if abs(beta) < 1e-4:
        return float(-np.tan(beta / 2.0))
    return float((np.cos(beta) - 1.0) / np.sin(beta))


def _reference_config(sigma: Subspace, rho: Subspace):
    """The (theta, u_sigma, U_sigma) configuration for the family R_sigma.

    u_sigma: unit vector of rho perpendicular to sigma ∩ rho with
    <u_sigma, v_sigma> < 0; U_sigma = R_sigma u_sigma lies in sigma.
    """
    _check_same_dim(sigma, rho)
    v_s, v = sigma.normal, rho.normal
    cos_theta = float(np.clip(v_s @ v, -1.0, 1.0))
    theta = float(np.arccos(cos_theta))
    if theta < 1e-12 or np.pi - theta < 1e-12:
        raise ValueError("v_sigma = ±v_rho: reference configuration degenerate")
    sin_theta = np.sin(theta)
    u_sigma = (cos_theta * v - v_s) / sin_theta
    big_u = cos_theta * u_sigma + sin_theta * v
    return theta, u_sigma, big_u


def rotation_derivative(sigma: Subspace, rho: Subspace, w: NDArray[np.floating]) -> NDArray[np.float64]:
    """Directional derivative of sigma -> R_sigma = rotation_between(rho, sigma).

    w must lie in sigma.  Writing R^n = (sigma ∩ rho) ⊕ R u_sigma ⊕ R v with
    v = v_rho, the closed forms are, with ϖ = varpi(theta_sigma):

    - along U_sigma:   z + b u_sigma + c v  ->  b v_sigma - c U_sigma;
    - along unit w ∈ sigma ∩ rho:
        z + a w + b u_sigma + c v  ->  [b ϖ - c] w + a ϖ u_sigma + a v
      for z ∈ sigma ∩ rho ∩ w^perp.

    A general w ∈ sigma decomposes as <w, U_sigma> U_sigma + (component in
    sigma ∩ rho); the derivative is linear in w, so the two cases combine.
    """
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.size != sigma.n:
        raise ValueError("direction has wrong dimension")
    if abs(w @ sigma.normal) > 1e-8:
        raise ValueError("direction w must lie in sigma")
    theta, u_sigma, big_u = _reference_config(sigma, rho)
    v = rho.normal
    v_s = sigma.normal
    vp = varpi(theta)

    a_u = float(w @ big_u)  # component along U_sigma
    w_par = w - a_u * big_u  # component in sigma ∩ rho (linear in w)

    deriv = a_u * (np.outer(v_s, u_sigma) - np.outer(big_u, v))
    deriv += (
        np.outer(w_par, vp * u_sigma - v)
        + np.outer(vp * u_sigma + v, w_par)
    )
    return deriv


def operator_norm(m: NDArray[np.floating]) -> float:
    """Spectral norm via singular values (matrices here are tiny)."""
    return float(np.linalg.norm(np.asarray(m, dtype=np.float64), ord=2))
