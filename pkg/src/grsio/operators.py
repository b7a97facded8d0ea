"""
Periodic Fourier fields and the analytic operators acting on them.

Everything lives on a uniform lattice over the torus [0, L)^n; band-limited
statements are exact on the lattice, spatial-decay statements hold up to
wrap-around controlled by taking L large.

Spectrum normalization: for values f on the grid,

    fhat(xi) = (L/M)^n * DFT(f)[k],    xi = k/L per axis (Nyquist box),

so that Parseval reads  sum |f|^2 (L/M)^n = sum |fhat|^2 / L^n.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from .grassmann import Rotation, Subspace, canonical_rotation
from .multipliers import MultiplierFamily

__all__ = [
    "TorusSpec",
    "GridFunction",
    "BumpProfile",
    "DEFAULT_ALPHA",
    "smoothstep",
    "project_annulus",
    "project_cone",
    "directional_apply",
    "maximal_directional",
    "carleson_sjolin",
    "subspace_from_shift",
    "shift_of_subspace",
    "cs_transference_error",
    "subspace_average",
    "maximal_truncated",
    "weak_l2_quasinorm",
    "hardy_littlewood",
    "so_net",
    "opnorm_growth_experiment",
    "dump_spectrum",
    "dump_experiment",
]

DEFAULT_ALPHA = 3.0**-8


@dataclass(frozen=True)
class TorusSpec:
    """Uniform M^n lattice on the torus [0, L)^n."""

    n: int
    L: float
    M: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.L <= 0:
            raise ValueError("need n >= 1 and L > 0")
        if self.M < 2 or self.M & (self.M - 1):
            raise ValueError("M must be a power of two")
        if self.M / (2 * self.L) < 4:
            raise ValueError("Nyquist frequency M/(2L) must be at least 4")

    @property
    def cell_volume(self) -> float:
        return (self.L / self.M) ** self.n

    @cached_property
    def freq_axis(self) -> NDArray[np.float64]:
        """Frequencies along one axis: k/L on the Nyquist box (fft order)."""
        return np.fft.fftfreq(self.M, d=self.L / self.M)

    def freq_grid(self) -> NDArray[np.float64]:
        """All lattice frequencies, shape (M,)*n + (n,)."""
        axes = np.meshgrid(*([self.freq_axis] * self.n), indexing="ij")
        return np.stack(axes, axis=-1)

    def freq_norm(self) -> NDArray[np.float64]:
        axes = np.meshgrid(*([self.freq_axis] * self.n), indexing="ij")
        return np.sqrt(sum(a**2 for a in axes))

    def space_axis(self) -> NDArray[np.float64]:
        return np.arange(self.M) * (self.L / self.M)


class GridFunction:
    """Complex samples on a torus lattice with a cached discrete spectrum.

    Treated as an immutable value: the sample array is locked on
    construction, so the cached spectrum can never go stale.
    """

    def __init__(self, spec: TorusSpec, values: NDArray[np.complexfloating]):
        values = np.array(values, dtype=np.complex128, copy=True)
        if values.shape != (spec.M,) * spec.n:
            raise ValueError(f"values must have shape {(spec.M,) * spec.n}")
        values.setflags(write=False)
        self.spec = spec
        self.values = values
        self._spectrum: NDArray[np.complex128] | None = None

    @classmethod
    def zeros(cls, spec: TorusSpec) -> "GridFunction":
        return cls(spec, np.zeros((spec.M,) * spec.n, dtype=np.complex128))

    @classmethod
    def from_spectrum(cls, spec: TorusSpec, spectrum: NDArray[np.complexfloating]) -> "GridFunction":
        scale = (spec.M / spec.L) ** spec.n
        values = np.fft.ifftn(np.asarray(spectrum, dtype=np.complex128) * scale)
        out = cls(spec, values)
        out._spectrum = np.array(spectrum, dtype=np.complex128)
        out._spectrum.setflags(write=False)
        return out

    @classmethod
    def single_mode(cls, spec: TorusSpec, xi: Sequence[float]) -> "GridFunction":
        """exp(2 pi i <x, xi>) for a lattice frequency xi (multiples of 1/L)."""
        xi = np.asarray(xi, dtype=np.float64)
        ks = np.round(xi * spec.L).astype(int)
        if np.max(np.abs(ks - xi * spec.L)) > 1e-9:
            raise ValueError("xi must lie on the 1/L frequency lattice")
        x = spec.space_axis()
        grids = np.meshgrid(*([x] * spec.n), indexing="ij")
        phase = sum(g * f for g, f in zip(grids, xi))
        return cls(spec, np.exp(2j * np.pi * phase))

    @classmethod
    def random_bandlimited(
        cls,
        spec: TorusSpec,
        rng: np.random.Generator,
        mask: NDArray[np.bool_] | None = None,
        normalize: bool = True,
    ) -> "GridFunction":
        shape = (spec.M,) * spec.n
        coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        if mask is not None:
            coeffs = np.where(mask, coeffs, 0.0)
        out = cls.from_spectrum(spec, coeffs)
        if normalize:
            nrm = out.l2_norm()
            if nrm == 0:
                raise ValueError("mask removed every frequency")
            out = cls.from_spectrum(spec, coeffs / nrm)
        return out

    @property
    def spectrum(self) -> NDArray[np.complex128]:
        if self._spectrum is None:
            s = np.fft.fftn(self.values) * self.spec.cell_volume
            s.setflags(write=False)
            self._spectrum = s
        return self._spectrum

    def apply_symbol(self, symbol: NDArray[np.complexfloating]) -> "GridFunction":
        return GridFunction.from_spectrum(self.spec, self.spectrum * symbol)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.spec.cell_volume))

    def linf_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.spec, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.spec, self.values - other.values)

    def __mul__(self, c: complex) -> "GridFunction":
        return GridFunction(self.spec, self.values * c)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# Bump profiles
# ---------------------------------------------------------------------------


def smoothstep(x: NDArray[np.floating]) -> NDArray[np.float64]:
    """C^inf step: 0 for x <= 0, 1 for x >= 1, strictly monotone between."""
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        g = np.where(x > 0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        g1 = np.where(x < 1, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return g / (g + g1)


def _window(r, lo, flat_lo, flat_hi, hi):
    """Radial window: 0 outside (lo, hi), 1 on [flat_lo, flat_hi]."""
    r = np.asarray(r, dtype=np.float64)
    up = smoothstep((r - lo) / (flat_lo - lo))
    down = smoothstep((hi - r) / (hi - flat_hi))
    return up * down


@dataclass(frozen=True)
class BumpProfile:
    """The fixed radial profiles: annulus cutoff zeta, cone cutoff, and the
    truncation bump gamma (used through its Fourier transform only).

    - zeta: supported in (1, 3/2), identically 1 on [9/8, 11/8];
    - cone cutoff: 1 on directions within 3^4 alpha of e_n, vanishing beyond
      3^5 alpha, combined with an Ann(1/2, 2) radial window that is 1 on
      [1, 3/2];
    - gamma_hat: radial, gamma_hat(0) = 1, supported in the unit ball.
    """

    alpha: float = DEFAULT_ALPHA

    def zeta(self, r: NDArray[np.floating]) -> NDArray[np.float64]:
        return _window(r, 1.0, 9.0 / 8.0, 11.0 / 8.0, 3.0 / 2.0)

    def radial_wide(self, r: NDArray[np.floating]) -> NDArray[np.float64]:
        """1 on [1, 3/2], supported in (1/2, 2)."""
        return _window(r, 0.5, 1.0, 1.5, 2.0)

    def cone_window(self, gap: NDArray[np.floating]) -> NDArray[np.float64]:
        """1 for gap <= 3^4 alpha, 0 for gap >= 3^5 alpha (gap = |xi/|xi| - e_n|)."""
        lo, hi = 3.0**4 * self.alpha, 3.0**5 * self.alpha
        return smoothstep((hi - np.asarray(gap, dtype=np.float64)) / (hi - lo))

    def psi_cone(self, xi: NDArray[np.floating]) -> NDArray[np.float64]:
        """The cone cutoff Psi on R^n frequency points xi (last axis = coords)."""
        xi = np.asarray(xi, dtype=np.float64)
        r = np.linalg.norm(xi, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = xi / np.maximum(r[..., None], 1e-300)
        gap = np.array(unit)
        gap[..., -1] -= 1.0
        gap = np.linalg.norm(gap, axis=-1)
        out = self.radial_wide(r) * self.cone_window(gap)
        return np.where(r > 0, out, 0.0)

    def gamma_hat(self, rho: NDArray[np.floating]) -> NDArray[np.float64]:
        """Fourier transform of the averaging bump: 1 at 0, 0 outside B(1)."""
        return smoothstep(1.0 - np.abs(np.asarray(rho, dtype=np.float64)))

    def check(self) -> None:
        """Assert the support / flat-region / normalization conditions."""
        r = np.linspace(0, 3, 3001)
        z = self.zeta(r)
        assert np.all(z[(r <= 1.0) | (r >= 1.5)] == 0.0)
        assert np.all(z[(r >= 9 / 8) & (r <= 11 / 8)] == 1.0)
        assert abs(self.gamma_hat(np.array(0.0)) - 1.0) < 1e-10
        assert np.all(self.gamma_hat(r[r >= 1.0]) == 0.0)


# ---------------------------------------------------------------------------
# Projections and directional multipliers
# ---------------------------------------------------------------------------


def project_annulus(f: GridFunction, k: float, profile: BumpProfile = BumpProfile()) -> GridFunction:
    """Annular projection P_k: multiply the spectrum by zeta(2^{-k}|xi|)."""
    return f.apply_symbol(profile.zeta(2.0**-k * f.spec.freq_norm()))


def project_cone(f: GridFunction, profile: BumpProfile = BumpProfile()) -> GridFunction:
    """Cone cutoff P_cn around the vertical direction e_n."""
    return f.apply_symbol(profile.psi_cone(f.spec.freq_grid()))


def _directional_symbol_arg(
    spec: TorusSpec, sigma: Subspace, Q: NDArray[np.floating] | None
) -> NDArray[np.float64]:
    """Q O_sigma P_sigma xi, reduced to its first n-1 coordinates."""
    xi = spec.freq_grid()  # (..., n)
    v = sigma.normal
    proj = xi - np.tensordot(xi, v, axes=([-1], [0]))[..., None] * v
    o = canonical_rotation(sigma).matrix
    flat = np.tensordot(proj, o.T, axes=([-1], [0]))[..., : spec.n - 1]
    if Q is not None:
        q = Q.matrix if isinstance(Q, Rotation) else np.asarray(Q, dtype=np.float64)
        flat = np.tensordot(flat, q.T, axes=([-1], [0]))
    return flat


def directional_apply(
    f: GridFunction,
    m: MultiplierFamily,
    sigma: Subspace,
    Q: Rotation | NDArray[np.floating] | None = None,
) -> GridFunction:
    """Multiplier with symbol m_sigma(Q O_sigma P_sigma xi), exact on the lattice."""
    if sigma.n != f.spec.n:
        raise ValueError("subspace dimension does not match the torus")
    arg = _directional_symbol_arg(f.spec, sigma, Q)
    symbol = m(sigma, arg)
    if not np.all(np.isfinite(symbol)):
        bad = arg[~np.isfinite(symbol)][0]
        raise ValueError(f"multiplier {m.label!r} failed at lattice point eta={bad}")
    return f.apply_symbol(symbol)


def maximal_directional(
    f: GridFunction,
    m: MultiplierFamily,
    Sigma: Sequence[Subspace],
    Qs: Sequence[Rotation | None] = (None,),
) -> NDArray[np.float64]:
    """Pointwise sup over (sigma, Q) of |T_m f|; returns a real sample array."""
    if not Sigma:
        raise ValueError("Sigma must be nonempty")
    out = np.zeros((f.spec.M,) * f.spec.n)
    for sigma in Sigma:
        for q in Qs:
            np.maximum(out, np.abs(directional_apply(f, m, sigma, q).values), out=out)
    return out


def carleson_sjolin(
    f: GridFunction,
    m0: Callable[[NDArray[np.float64]], NDArray[np.complexfloating]],
    Ngrid: Sequence[Sequence[float]],
) -> NDArray[np.float64]:
    """sup over shifts N of |(m0(. + N) fhat)^vee| on a d-dimensional torus."""
    xi = f.spec.freq_grid()
    out = np.zeros((f.spec.M,) * f.spec.n)
    for N in Ngrid:
        shifted = xi + np.asarray(N, dtype=np.float64)
        g = f.apply_symbol(np.asarray(m0(shifted), dtype=np.complex128))
        np.maximum(out, np.abs(g.values), out=out)
    return out


# ---------------------------------------------------------------------------
# Carleson--Sjolin transference
# ---------------------------------------------------------------------------


def subspace_from_shift(N: Sequence[float], R: float, n: int) -> Subspace:
    """The hyperplane whose shift parameter is N: v = -N/R + sqrt(1-|N|^2/R^2) e_n."""
    N = np.asarray(N, dtype=np.float64).ravel()
    if N.size != n - 1:
        raise ValueError("shift N must have dimension n-1")
    if np.linalg.norm(N) >= R:
        raise ValueError("|N| must be smaller than R")
    v = np.zeros(n)
    v[:-1] = -N / R
    v[-1] = np.sqrt(1.0 - np.dot(N, N) / R**2)
    return Subspace(v)


def shift_of_subspace(sigma: Subspace, R: float) -> NDArray[np.float64]:
    """N(sigma) = R [ <v, e_n> e_n - v ], as a vector in R^{n-1}."""
    v = sigma.normal
    full = R * (v[-1] * np.eye(sigma.n)[-1] - v)
    return full[:-1]


def hardy_littlewood(values: NDArray[np.floating], max_scale: int | None = None) -> NDArray[np.float64]:
    """Discrete Hardy--Littlewood maximal function over periodic cubes."""
    a = np.abs(np.asarray(values)).astype(np.float64)
    out = np.array(a)
    size = 3
    limit = max_scale or a.shape[0]
    while size <= limit:
        avg = ndimage.uniform_filter(a, size=size, mode="wrap")
        np.maximum(out, avg, out=out)
        size *= 2
    return out


def cs_transference_error(
    F: GridFunction,
    m0: Callable[[NDArray[np.float64]], NDArray[np.complexfloating]],
    Ns: Sequence[Sequence[float]],
    R: float,
    R0: float,
    eps: float,
    c0: float = 1.0,
) -> float:
    """Measured sup_sigma ||Err_sigma F||_inf / ||HL F||_inf ratio.

    Err_sigma multiplies the spectrum by lambda(xi) * [m0(eta + N + E(xi,sigma))
    - m0(eta + N)], where E is the transference error vector

        E(xi, sigma) = [<v,e_n> - 1] <eta, u> u + (xi_n / R - 1) N(sigma),

    u = N/|N|, and lambda is a smooth window equal to 1 on
    B(R0) x {|xi_n - R| <= 1} and vanishing outside B(10 R0) x {|xi_n - R| <= 10}.
    """
    if 2 * R0 >= c0 * eps * R:
        raise ValueError("smallness condition 2*R0 < c0*eps*R violated")
    n = F.spec.n
    xi = F.spec.freq_grid()
    eta = xi[..., :-1]
    xin = xi[..., -1]
    lam = smoothstep((10 * R0 - np.linalg.norm(eta, axis=-1)) / (9 * R0)) * smoothstep(
        (10.0 - np.abs(xin - R)) / 9.0
    )
    denom = np.max(hardy_littlewood(F.values))
    if denom == 0:
        return 0.0
    worst = 0.0
    for N in Ns:
        N = np.asarray(N, dtype=np.float64)
        sigma = subspace_from_shift(N, R, n)
        v_en = sigma.normal[-1]
        nrm = np.linalg.norm(N)
        if nrm == 0:
            err_vec = np.zeros_like(eta)
        else:
            u = N / nrm
            err_vec = (v_en - 1.0) * np.tensordot(eta, u, axes=([-1], [0]))[..., None] * u
            err_vec = err_vec + (xin / R - 1.0)[..., None] * N
        delta = np.asarray(m0(eta + N + err_vec), dtype=np.complex128) - np.asarray(
            m0(eta + N), dtype=np.complex128
        )
        err = F.apply_symbol(lam * delta)
        worst = max(worst, err.linf_norm() / denom)
    return worst


# ---------------------------------------------------------------------------
# Averages, truncated maximal operator, weak quasinorm
# ---------------------------------------------------------------------------


def _projected_norm(spec: TorusSpec, sigma: Subspace) -> NDArray[np.float64]:
    """|P_sigma xi| on the frequency lattice."""
    xi = spec.freq_grid()
    inner = np.tensordot(xi, sigma.normal, axes=([-1], [0]))
    return np.sqrt(np.maximum(np.sum(xi**2, axis=-1) - inner**2, 0.0))


def subspace_average(
    f: GridFunction, sigma: Subspace, h: float, profile: BumpProfile = BumpProfile()
) -> GridFunction:
    """Averaging along sigma at scale h: symbol gamma_hat(h |P_sigma xi|)."""
    if h <= 0:
        raise ValueError("h must be positive")
    return f.apply_symbol(profile.gamma_hat(h * _projected_norm(f.spec, sigma)).astype(np.complex128))


def maximal_truncated(
    f: GridFunction,
    m: MultiplierFamily,
    Sigma: Sequence[Subspace],
    Qs: Sequence[Rotation | None],
    hs: Sequence[float],
    profile: BumpProfile = BumpProfile(),
) -> NDArray[np.float64]:
    """sup over (sigma, Q, h) of the multiplier m_sigma(Q O P xi) gamma_hat(h |P xi|)."""
    out = np.zeros((f.spec.M,) * f.spec.n)
    for sigma in Sigma:
        pn = _projected_norm(f.spec, sigma)
        for q in Qs:
            base = m(sigma, _directional_symbol_arg(f.spec, sigma, q))
            for h in hs:
                g = f.apply_symbol(base * profile.gamma_hat(h * pn))
                np.maximum(out, np.abs(g.values), out=out)
    return out


def weak_l2_quasinorm(g: GridFunction | NDArray[np.floating], cell_volume: float | None = None) -> float:
    """sup_lambda lambda |{ |g| > lambda }|^{1/2} over a dyadic lambda-grid."""
    if isinstance(g, GridFunction):
        a = np.abs(g.values).ravel()
        vol = g.spec.cell_volume
    else:
        a = np.abs(np.asarray(g)).ravel()
        vol = cell_volume if cell_volume is not None else 1.0
    top = float(np.max(a)) if a.size else 0.0
    if top == 0.0:
        return 0.0
    best = 0.0
    lam = top * (1.0 - 1e-12)  # catch level sets at the max itself
    for _ in range(40):
        measure = float(np.count_nonzero(a > lam)) * vol
        best = max(best, lam * np.sqrt(measure))
        lam /= 2.0
    return best


# ---------------------------------------------------------------------------
# Rotation nets and the log N growth experiment
# ---------------------------------------------------------------------------


def so_net(d: int, count: int, seed: int = 0) -> list[Rotation]:
    """Quasi-uniform sample of SO(d) for d <= 3 (identity always included)."""
    if d == 1 or count <= 1:
        return [Rotation.identity(max(d, 1))]
    if d == 2:
        out = []
        for k in range(count):
            t = 2 * np.pi * k / count
            out.append(Rotation(np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])))
        return out
    if d == 3:
        from scipy.spatial.transform import Rotation as R3

        mats = R3.random(count - 1, rng=np.random.default_rng(seed)).as_matrix()
        out = [Rotation.identity(3)]
        for mat in mats:
            if np.linalg.det(mat) < 0:
                mat = -mat
            out.append(Rotation(mat))
        return out
    raise ValueError("rotation nets implemented for d <= 3 only")


def direction_set(n: int, N: int, alpha: float, kind: str = "equispaced", seed: int = 0) -> list[Subspace]:
    """N hyperplanes whose normals lie in the alpha-cap around e_n."""
    en = np.zeros(n)
    en[-1] = 1.0
    out: list[Subspace] = []
    if kind == "equispaced":
        if n == 2:
            ts = alpha * (2 * np.arange(N) / max(N - 1, 1) - 1.0) if N > 1 else np.zeros(1)
            for t in ts:
                out.append(Subspace(np.array([np.sin(t), np.cos(t)])))
        else:
            # spiral points on the cap
            for k in range(N):
                r = alpha * np.sqrt((k + 0.5) / N)
                phi = k * np.pi * (3 - np.sqrt(5))
                v = np.array(en)
                v[0] += r * np.cos(phi)
                v[1] += r * np.sin(phi)
                out.append(Subspace.from_normal(v))
    elif kind == "random":
        rng = np.random.default_rng(seed)
        for _ in range(N):
            v = np.array(en)
            v[:-1] += alpha * rng.uniform(-1, 1, size=n - 1)
            out.append(Subspace.from_normal(v))
    elif kind == "lacunary":
        for k in range(N):
            t = alpha * 2.0 ** -(k % 48)
            v = np.array(en)
            v[0] += t
            out.append(Subspace.from_normal(v))
    else:
        raise ValueError(f"unknown direction-set kind {kind!r}")
    return out


def _boundary_adversaries(
    spec: TorusSpec, m: MultiplierFamily, Sigma: Sequence[Subspace], count: int, rng
) -> list[GridFunction]:
    """Inputs whose spectrum piles up where the symbol changes across directions.

    The maximal symbol max_sigma |m_sigma| is smooth away from the direction
    boundaries; concentrating fhat where the per-direction symbols disagree
    most is the natural adversarial family.
    """
    # streamed over directions: materializing all per-direction symbols is
    # O(N M^n) memory and goes out of memory at N=1024 on a 512^2 grid
    hi = lo = disagreement = prev = None
    for s in Sigma:
        sym = m(s, _directional_symbol_arg(spec, s, None))
        mag = np.abs(sym)
        if hi is None:
            hi, lo = mag.copy(), mag.copy()
            disagreement = np.zeros_like(mag)
        else:
            np.maximum(hi, mag, out=hi)
            np.minimum(lo, mag, out=lo)
            disagreement += np.abs(sym - prev)
        prev = sym
    score = (hi - lo) + disagreement
    profile = BumpProfile()
    window = profile.zeta(spec.freq_norm()) > 0
    score = np.where(window, score, 0.0)
    if np.max(score) == 0:
        return []
    out = []
    thresh = np.quantile(score[score > 0], 0.9)
    mask = score >= thresh
    for _ in range(count):
        out.append(GridFunction.random_bandlimited(spec, rng, mask=mask))
    return out


def _nested_directions(
    Sigma_full: Sequence[Subspace], n: int, N: int, alpha: float, kind: str, seed: int
) -> list[Subspace]:
    """Size-N subset of Sigma_full so that the sets are nested along N_list.

    Nesting makes r(N) nondecreasing by construction (sup over a larger set);
    random and lacunary families are sequential, so a prefix works, and an
    equispaced grid refines along divisors via striding.
    """
    if N >= len(Sigma_full):
        return list(Sigma_full)
    if kind == "equispaced":
        if len(Sigma_full) % N == 0:
            stride = len(Sigma_full) // N
            return list(Sigma_full[::stride][:N])
        return direction_set(n, N, alpha, kind=kind, seed=seed)
    return list(Sigma_full[:N])


def opnorm_growth_experiment(
    m: MultiplierFamily,
    n: int,
    N_list: Sequence[int],
    trials: int,
    seed: int,
    spec: TorusSpec,
    alpha: float = DEFAULT_ALPHA,
    kinds: Sequence[str] = ("equispaced", "random"),
    adversarial: int = 3,
) -> list[dict]:
    """Estimate r(N) = max_f ||max directional multiplier of P_0 P_cn f||_2.

    Lower-bound estimator: random band-limited unit-norm inputs plus inputs
    concentrated on direction boundaries.  One candidate pool is shared by
    every N and the direction sets are nested along N_list, so r(N) is
    nondecreasing by construction.  Returns rows with keys
    N, r, estimator, seed.
    """
    profile = BumpProfile(alpha=alpha)
    cone_mask = profile.psi_cone(spec.freq_grid()) * profile.zeta(spec.freq_norm()) > 1e-12
    N_max = max(N_list)
    best: dict[int, tuple[float, str]] = {N: (0.0, "random") for N in N_list}
    for kind in kinds:
        Sigma_full = direction_set(n, N_max, alpha, kind=kind, seed=seed)
        rng = np.random.default_rng(seed)
        candidates = [
            ("random", GridFunction.random_bandlimited(spec, rng, mask=cone_mask))
            for _ in range(trials)
        ]
        candidates += [
            ("boundary", g)
            for g in _boundary_adversaries(spec, m, Sigma_full, adversarial, rng)
        ]
        prepared = []
        for est_kind, f in candidates:
            nrm = f.l2_norm()
            if nrm == 0:
                continue
            prepared.append((est_kind, project_cone(project_annulus(f, 0.0, profile), profile), nrm))
        for N in N_list:
            Sigma = _nested_directions(Sigma_full, n, N, alpha, kind, seed)
            for est_kind, g, nrm in prepared:
                val = np.sqrt(
                    np.sum(maximal_directional(g, m, Sigma) ** 2) * spec.cell_volume
                ) / nrm
                if val > best[N][0]:
                    best[N] = (val, f"{kind}/{est_kind}")
    return [
        {"N": N, "r": best[N][0], "estimator": best[N][1], "seed": seed} for N in N_list
    ]


# ---------------------------------------------------------------------------
# CSV interfaces
# ---------------------------------------------------------------------------


def dump_spectrum(f: GridFunction, path: str) -> None:
    """One row per lattice frequency: xi indices, then re, im of the coefficient."""
    spec = f.spec
    s = f.spectrum
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for idx in np.ndindex(*s.shape):
            w.writerow(list(idx) + [repr(s[idx].real), repr(s[idx].imag)])


def dump_experiment(rows: Iterable[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "r", "estimator", "seed"])
        for row in rows:
            w.writerow([row["N"], repr(float(row["r"])), row["estimator"], row["seed"]])
