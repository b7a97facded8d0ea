"""
Multiplier families over the sphere of directions, and sampled estimates of
their Mihlin-type norms.

A family assigns to each oriented hyperplane sigma a symbol m_sigma on R^d.
The norm of interest is

    sup_{|alpha| <= A} sup_eta |eta|^{|alpha|} |D^alpha m_sigma(eta)|,

estimated from below by sampling a log-spaced radial lattice and taking
central finite differences with step proportional to |eta|.  A family-level
report additionally measures the log-Hoelder modulus
log(e + 1/dist(sigma,tau)) * ||m_tau - m_sigma|| over sampled pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .grassmann import Subspace, dist

__all__ = [
    "MultiplierFamily",
    "NormReport",
    "LatticeSpec",
    "mihlin_norm_estimate",
    "family_norm_estimate",
    "builtin",
    "constant_one",
    "hilbert_smoothed",
    "riesz_component",
    "cs_shift",
    "smooth_transition",
]

# eval signature: (sigma, eta) -> complex array; eta has shape (..., d).
EvalFn = Callable[[Subspace, NDArray[np.float64]], NDArray[np.complex128]]


@dataclass(frozen=True)
class MultiplierFamily:
    """Map (sigma, eta) -> m_sigma(eta) with declared smoothness order."""

    d: int
    eval: EvalFn
    order: int
    label: str

    def __call__(self, sigma: Subspace, eta: NDArray[np.floating]) -> NDArray[np.complex128]:
        eta = np.asarray(eta, dtype=np.float64)
        if eta.shape[-1] != self.d:
            raise ValueError(f"eta must have last dimension {self.d}")
        return np.asarray(self.eval(sigma, eta), dtype=np.complex128)

    def validate(self, sigmas: list[Subspace], seed: int = 0) -> None:
        """Spot-check finiteness of the symbol away from the origin."""
        rng = np.random.default_rng(seed)
        eta = rng.standard_normal((64, self.d))
        eta *= np.exp(rng.uniform(-3, 3, size=(64, 1)) * np.log(10)) / np.linalg.norm(
            eta, axis=-1, keepdims=True
        )
        for s in sigmas:
            vals = self(s, eta)
            if not np.all(np.isfinite(vals)):
                bad = eta[~np.isfinite(vals)][0]
                raise ValueError(f"symbol {self.label!r} not finite at eta={bad}")


@dataclass(frozen=True)
class LatticeSpec:
    """Sampling lattice for norm estimation: log-spaced radii times directions."""

    num_radii: int = 25
    num_directions: int = 8
    r_min: float = 1e-3
    r_max: float = 1e3
    step_factor: float = 1e-3
    seed: int = 0

    def points(self, d: int) -> NDArray[np.float64]:
        radii = np.geomspace(self.r_min, self.r_max, self.num_radii)
        if d == 1:
            dirs = np.array([[1.0], [-1.0]])
        else:
            rng = np.random.default_rng(self.seed)
            dirs = rng.standard_normal((self.num_directions, d))
            dirs = np.concatenate([dirs, np.eye(d)])
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)


@dataclass(frozen=True)
class NormReport:
    mihlin_sup: float
    holder_sup: float
    samples: LatticeSpec

    def __post_init__(self) -> None:
        if self.mihlin_sup < 0 or self.holder_sup < 0:
            raise ValueError("norm estimates must be nonnegative")


def _multi_indices(d: int, max_order: int):
    for total in range(max_order + 1):
        for alpha in itertools.product(range(total + 1), repeat=d):
            if sum(alpha) == total:
                yield alpha


def _stencil(alpha: tuple[int, ...]):
    """Offsets (in units of the step h) and coefficients (times h^{-|alpha|})
    of the tensor-product central-difference stencil for D^alpha."""
    offsets = [np.zeros(len(alpha))]
    coeffs = [1.0]
    for axis, k in enumerate(alpha):
        for _ in range(k):
            new_off, new_co = [], []
            for off, co in zip(offsets, coeffs):
                for sgn in (+1.0, -1.0):
                    o = np.array(off)
                    o[axis] += sgn
                    new_off.append(o)
                    new_co.append(co * sgn / 2.0)
            offsets, coeffs = new_off, new_co
    return np.array(offsets), np.array(coeffs)


def mihlin_norm_estimate(
    m: MultiplierFamily,
    sigma: Subspace,
    A: int,
    samples: LatticeSpec = LatticeSpec(),
) -> float:
    """Sampled lower bound on sup_{|a|<=A} sup_eta |eta|^{|a|} |D^a m_sigma|."""
    if A < 0:
        raise ValueError("derivative order A must be nonnegative")
    pts = samples.points(m.d)  # (P, d)
    norms = np.linalg.norm(pts, axis=1)  # (P,)
    h = samples.step_factor * norms  # per-point step
    best = 0.0
    for alpha in _multi_indices(m.d, A):
        k = sum(alpha)
        offsets, coeffs = _stencil(alpha)
        # evaluate m on every shifted copy of the lattice
        acc = np.zeros(len(pts), dtype=np.complex128)
        for off, co in zip(offsets, coeffs):
            shifted = pts + h[:, None] * off[None, :]
            acc += co * m(sigma, shifted)
        deriv = acc / np.where(k > 0, h**k, 1.0)
        weighted = norms**k * np.abs(deriv)
        if not np.all(np.isfinite(weighted)):
            bad = pts[~np.isfinite(weighted)][0]
            raise ValueError(
                f"non-finite derivative estimate for {m.label!r} at eta={bad}, alpha={alpha}"
            )
        best = max(best, float(np.max(weighted)))
    return best


def family_norm_estimate(
    m: MultiplierFamily,
    A: int,
    pairs: list[tuple[Subspace, Subspace]],
    samples: LatticeSpec = LatticeSpec(),
) -> NormReport:
    """Estimate the family norm: uniform Mihlin sup plus log-Hoelder modulus."""
    mihlin_sup = 0.0
    holder_sup = 0.0
    for s, t in pairs:
        mihlin_sup = max(
            mihlin_sup,
            mihlin_norm_estimate(m, s, A, samples),
            mihlin_norm_estimate(m, t, A, samples),
        )
        gap = dist(s, t)
        if gap == 0.0:
            continue
        diff = MultiplierFamily(
            d=m.d,
            eval=lambda _, eta, s=s, t=t: m(t, eta) - m(s, eta),
            order=m.order,
            label=f"diff({m.label})",
        )
        diff_norm = mihlin_norm_estimate(diff, s, A, samples)
        holder_sup = max(holder_sup, float(np.log(np.e + 1.0 / gap)) * diff_norm)
    return NormReport(mihlin_sup=mihlin_sup, holder_sup=holder_sup, samples=samples)


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------


def smooth_transition(x: NDArray[np.floating]) -> NDArray[np.float64]:
    """Odd C^inf transition with value exactly sign(x) for |x| >= 1."""
    x = np.asarray(x, dtype=np.float64)
    u = np.clip((x + 1.0) / 2.0, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        g = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
        g1 = np.where(u < 1, np.exp(-1.0 / np.maximum(1.0 - u, 1e-300)), 0.0)
    t = g / (g + g1)
    return 2.0 * t - 1.0


def constant_one(d: int) -> MultiplierFamily:
    return MultiplierFamily(
        d=d,
        eval=lambda sigma, eta: np.ones(eta.shape[:-1], dtype=np.complex128),
        order=0,
        label="constant_one",
    )


def hilbert_smoothed(d: int, eps: float = 1e-6) -> MultiplierFamily:
    """-i sign(eta_1), smoothed on the slab |eta_1| < eps (exact outside)."""

    def ev(sigma, eta):
        return -1j * smooth_transition(eta[..., 0] / eps)

    return MultiplierFamily(d=d, eval=ev, order=1, label=f"hilbert_smoothed(eps={eps:g})")


def riesz_component(d: int, k: int = 1) -> MultiplierFamily:
    """k-th Riesz component eta_k / |eta| (singular only at the origin)."""
    if not 1 <= k <= d:
        raise ValueError(f"component index {k} out of range 1..{d}")

    def ev(sigma, eta):
        r = np.linalg.norm(eta, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = eta[..., k - 1] / r
        return np.where(r > 0, out, 0.0).astype(np.complex128)

    return MultiplierFamily(d=d, eval=ev, order=2, label=f"riesz_component({k})")


def cs_shift(
    d: int,
    m0: Callable[[NDArray[np.float64]], NDArray[np.complex128]],
    N: NDArray[np.floating],
    label: str = "m0",
) -> MultiplierFamily:
    """Modulation shift: (sigma, eta) -> m0(eta + N), independent of sigma."""
    N = np.asarray(N, dtype=np.float64).ravel()
    if N.size != d:
        raise ValueError("shift N has wrong dimension")

    def ev(sigma, eta):
        return np.asarray(m0(eta + N), dtype=np.complex128)

    return MultiplierFamily(d=d, eval=ev, order=0, label=f"cs_shift({label}, N={N.tolist()})")


def builtin(label: str, d: int, **params) -> MultiplierFamily:
    """Catalog lookup for the named built-in families."""
    if label == "constant_one":
        return constant_one(d)
    if label == "hilbert_smoothed":
        return hilbert_smoothed(d, **params)
    if label == "riesz_component":
        return riesz_component(d, **params)
    if label == "cs_shift":
        return cs_shift(d, **params)
    raise ValueError(f"unknown multiplier label {label!r}")
