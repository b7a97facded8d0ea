"""Experiment orchestration: configuration, the six experiment commands, and
machine-readable reports.

Every command is a pure function of (config, seed): re-running writes
byte-identical CSV/JSON artifacts.  Reports echo the fully resolved
configuration so an output directory is self-describing.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, asdict, replace
from typing import Callable, Sequence

import numpy as np

from .grassmann import (
    Subspace,
    dist,
    operator_norm,
    projection_matrix,
    projection_derivative,
    rotation_between,
    rotation_derivative,
    standard_frame,
    tilted_subspace,
    varpi,
)
from .multipliers import MultiplierFamily, builtin
from .operators import (
    BumpProfile,
    GridFunction,
    TorusSpec,
    carleson_sjolin,
    cs_transference_error,
    direction_set,
    dump_experiment,
    opnorm_growth_experiment,
    subspace_average,
    _projected_norm,
)
from .tiling import chart_lift, default_kappa, in_scale_set
from . import trees as tr
from . import wavepackets as wp

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunReport",
    "cmd_geometry_selftest",
    "cmd_logn",
    "cmd_carleson",
    "cmd_differentiation",
    "cmd_tiles_trees",
    "cmd_frame",
    "COMMANDS",
    "write_report",
]


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration (CLI exit code 2)."""


_DIRECTION_KINDS = ("equispaced", "random", "lacunary")
_MULTIPLIERS = ("constant_one", "hilbert_smoothed", "riesz_component")


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings shared by all commands; d = n - 1 is enforced."""

    n: int = 2
    L: float = 16.0
    M: int = 256
    alpha: float = 0.002
    kappa: int = 1
    A: int = 4
    seed: int = 0
    N_list: tuple[int, ...] = (8, 16, 32)
    direction_kind: str = "equispaced"
    multiplier: str = "hilbert_smoothed"
    eps: float = 0.05
    scales: tuple[float, ...] = (3.0, 9.0, 27.0)
    trials: int = 2
    tile_count: int = 32
    num_functions: int = 10
    num_fields: int = 5
    h_kmax: int = 8
    inject_fault: str = ""
    out: str = ""

    @property
    def d(self) -> int:
        return self.n - 1

    def validate(self) -> "ExperimentConfig":
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if self.direction_kind not in _DIRECTION_KINDS:
            raise ConfigError(f"direction_kind must be one of {_DIRECTION_KINDS}")
        if self.multiplier not in _MULTIPLIERS:
            raise ConfigError(f"multiplier must be one of {_MULTIPLIERS}")
        if not (0 < self.alpha < 3.0**-5):
            raise ConfigError("alpha must lie in (0, 3^-5)")
        if self.M < 8 or self.L <= 0:
            raise ConfigError("torus parameters out of range")
        if self.M < 8 * self.L:
            raise ConfigError("Nyquist frequency M/(2L) must be at least 4")
        if self.kappa < 0 or self.A < 1 or self.trials < 1:
            raise ConfigError("kappa, A, trials out of range")
        if any(N < 1 for N in self.N_list) or not self.N_list:
            raise ConfigError("N_list must be nonempty positive integers")
        for s in self.scales:
            if not in_scale_set(s, self.alpha):
                raise ConfigError(f"scale {s} outside the admissible scale set")
        if self.tile_count < 0 or self.num_functions < 1 or self.num_fields < 1:
            raise ConfigError("counts out of range")
        if not 1 <= self.h_kmax <= 40:
            raise ConfigError("h_kmax out of range")
        return self

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        known = set(cls.__dataclass_fields__)
        d_declared = raw.pop("d", None)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("N_list", "scales"):
            if key in raw:
                raw[key] = tuple(raw[key])
        try:
            cfg = cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        if d_declared is not None and d_declared != cfg.n - 1:
            raise ConfigError("d must equal n - 1")
        return cfg.validate()

    def override(self, **kwargs) -> "ExperimentConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        if "N_list" in kwargs:
            kwargs["N_list"] = tuple(kwargs["N_list"])
        return replace(self, **kwargs).validate()

    def resolved(self) -> dict:
        out = asdict(self)
        out["d"] = self.d
        return out

    def torus(self) -> TorusSpec:
        return TorusSpec(n=self.n, L=self.L, M=self.M)

    def family(self) -> MultiplierFamily:
        if self.multiplier == "hilbert_smoothed":
            return builtin(self.multiplier, self.d, eps=self.eps)
        return builtin(self.multiplier, self.d)


@dataclass
class RunReport:
    """Outcome of one command: per-check verdicts, measured constants, tables."""

    command: str
    config: dict
    checks: list[dict] = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)

    def check(self, name: str, passed: bool, value=None, detail: str = "") -> None:
        entry = {"name": name, "passed": bool(passed)}
        if value is not None:
            entry["value"] = value
        if detail:
            entry["detail"] = detail
        self.checks.append(entry)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def summary_lines(self) -> list[str]:
        out = []
        for c in self.checks:
            tag = "PASS" if c["passed"] else "FAIL"
            val = f"  value={c['value']!r}" if "value" in c else ""
            out.append(f"[{tag}] {self.command}:{c['name']}{val}")
        return out

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "passed": self.passed,
            "config": self.config,
            "checks": self.checks,
            "constants": self.constants,
            "tables": sorted(self.tables),
        }
        return json.dumps(payload, sort_keys=True, indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_report(report: RunReport, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    for name, (header, rows) in report.tables.items():
        with open(os.path.join(out_dir, f"{name}.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])


# ---------------------------------------------------------------------------
# geometry selftest
# ---------------------------------------------------------------------------


def _random_cap_subspace(rng, n: int, spread: float = 0.3) -> Subspace:
    y = rng.uniform(-spread, spread, size=n - 1)
    while y @ y >= spread**2:
        y = rng.uniform(-spread, spread, size=n - 1)
    return Subspace(chart_lift(y))


def cmd_geometry_selftest(cfg: ExperimentConfig) -> RunReport:
    rep = RunReport("geometry_selftest", cfg.resolved())
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    pairs = 2000

    worst_norm = worst_map = worst_orth = 0.0
    for k in range(pairs):
        sigma = _random_cap_subspace(rng, n)
        tau = _random_cap_subspace(rng, n)
        O = rotation_between(sigma, tau).matrix
        if cfg.inject_fault == "orthogonality" and k == pairs // 2:
            O = O + 1e-6
        worst_norm = max(worst_norm, abs(operator_norm(O - np.eye(n)) - dist(sigma, tau)))
        worst_map = max(worst_map, float(np.linalg.norm(O @ sigma.normal - tau.normal)))
        worst_orth = max(worst_orth, float(np.max(np.abs(O.T @ O - np.eye(n)))))
    rep.check("rotation_norm_identity", worst_norm <= 1e-9, worst_norm)
    rep.check("rotation_maps_normal", worst_map <= 1e-10, worst_map)
    rep.check("rotation_orthogonality", worst_orth <= 1e-12, worst_orth)

    # derivative formulas vs central differences, observed order >= 1.9
    frame = standard_frame(_random_cap_subspace(rng, n))
    xi = rng.standard_normal(n)
    hs = (1e-3, 1e-4)
    slopes = []
    for j in range(1, n):
        exact = projection_derivative(frame, j) @ xi
        errs = []
        for h in hs:
            plus = projection_matrix(tilted_subspace(frame, j, h)[0]) @ xi
            minus = projection_matrix(tilted_subspace(frame, j, -h)[0]) @ xi
            errs.append(max(float(np.max(np.abs((plus - minus) / (2 * h) - exact))), 1e-300))
        slopes.append(math.log(errs[0] / errs[1]) / math.log(hs[0] / hs[1]))
    rep.check("projection_derivative_order", min(slopes) >= 1.9, min(slopes))

    # rotation derivative along a tilt of sigma toward -w
    rho = _random_cap_subspace(rng, n)
    sigma = _random_cap_subspace(rng, n)
    w = standard_frame(sigma).vectors[0]
    exact = rotation_derivative(sigma, rho, w)
    fd_errs = []
    for t in (1e-4, 1e-5):
        tau = Subspace.from_normal(np.cos(t) * sigma.normal - np.sin(t) * w)
        fd = (rotation_between(rho, tau).matrix - rotation_between(rho, sigma).matrix) / t
        fd_errs.append(float(np.max(np.abs(fd - exact))))
    rep.check("rotation_derivative_fd", fd_errs[1] <= 50 * 1e-5, fd_errs[1])

    # the half-angle factor in the rotation formula
    betas = rng.uniform(1e-6, 1.0, size=200)
    worst_varpi = max(abs(varpi(b) + math.tan(b / 2.0)) for b in betas)
    rep.check("varpi_half_angle", worst_varpi <= 1e-12, worst_varpi)

    rep.constants.update(
        {
            "pairs": pairs,
            "max_norm_gap": worst_norm,
            "max_normal_map_error": worst_map,
            "max_orthogonality_defect": worst_orth,
        }
    )
    return rep


# ---------------------------------------------------------------------------
# log N growth
# ---------------------------------------------------------------------------


def cmd_logn(cfg: ExperimentConfig) -> RunReport:
    rep = RunReport("logn", cfg.resolved())
    spec = cfg.torus()
    m = cfg.family()
    rows = opnorm_growth_experiment(
        m, cfg.n, list(cfg.N_list), cfg.trials, cfg.seed, spec, alpha=cfg.alpha
    )
    rep.tables["growth"] = (
        ["N", "r", "estimator", "seed"],
        [[row["N"], float(row["r"]), row["estimator"], row["seed"]] for row in rows],
    )
    rs = [float(row["r"]) for row in rows]
    rep.check("row_per_N", len(rows) == len(cfg.N_list), len(rows))
    mono = all(b >= a - 1e-12 for a, b in zip(rs, rs[1:]))
    rep.check("r_nondecreasing", mono, rs)
    if len(rs) >= 3:
        X = np.log(np.asarray(cfg.N_list, dtype=float))
        Y = np.asarray(rs)
        coef = np.polyfit(X, Y, 1)
        pred = np.polyval(coef, X)
        ss_res = float(np.sum((Y - pred) ** 2))
        ss_tot = float(np.sum((Y - np.mean(Y)) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        rep.constants["log_fit_slope"] = float(coef[0])
        rep.constants["log_fit_r2"] = r2
        rep.check("log_fit_r2", r2 >= 0.9, r2)
        top = [(N, r) for N, r in zip(cfg.N_list, rs)][-3:]
        ratios = [r / math.sqrt(N) for N, r in top]
        rep.constants["sqrtN_ratios_top3"] = ratios
        rep.check(
            "subpolynomial_top_ratios",
            all(b < a for a, b in zip(ratios, ratios[1:])),
            ratios,
        )
    return rep


# ---------------------------------------------------------------------------
# Carleson--Sjolin
# ---------------------------------------------------------------------------


def _base_symbol(cfg: ExperimentConfig) -> Callable[[np.ndarray], np.ndarray]:
    fam = cfg.family()
    sigma0 = Subspace.horizontal(cfg.n)
    return lambda eta: np.asarray(fam(sigma0, eta), dtype=np.complex128)


def cmd_carleson(cfg: ExperimentConfig) -> RunReport:
    rep = RunReport("carleson", cfg.resolved())
    d = cfg.d
    spec_d = TorusSpec(n=d, L=cfg.L, M=cfg.M)
    m0 = _base_symbol(cfg)
    rng = np.random.default_rng(cfg.seed)

    shifts = [np.zeros(d)] + [rng.uniform(-3.0, 3.0, size=d) for _ in range(6)]
    xi0 = np.full(d, 1.25)
    f = GridFunction.single_mode(spec_d, xi0)
    sup = float(np.max(carleson_sjolin(f, m0, shifts)))
    oracle = max(float(np.abs(m0(np.asarray([xi0 + N]))[0])) for N in shifts)
    rep.check("single_mode_sup", abs(sup - oracle) <= 1e-9, abs(sup - oracle))

    zero = float(np.max(carleson_sjolin(f, lambda eta: np.zeros(eta.shape[:-1]), shifts)))
    rep.check("zero_symbol", zero == 0.0, zero)

    # weak-norm ratios on random band-limited inputs
    from .operators import weak_l2_quasinorm

    ratios = []
    for _ in range(cfg.trials):
        g = GridFunction.random_bandlimited(spec_d, rng)
        out = carleson_sjolin(g, m0, shifts)
        ratios.append(weak_l2_quasinorm(out, spec_d.cell_volume) / g.l2_norm())
    rep.constants["weak_norm_ratios"] = ratios
    rep.check("weak_norm_finite", all(np.isfinite(ratios)), max(ratios))

    # transference error under epsilon-halving
    spec_n = cfg.torus()
    F = GridFunction.random_bandlimited(spec_n, rng)
    R, R0 = 6.0, 0.25
    Ns = [rng.uniform(-2.0, 2.0, size=d) for _ in range(4)]
    rows = []
    for eps in (0.5, 0.25, 0.125):
        err = cs_transference_error(F, m0, Ns, R=R, R0=R0, eps=eps)
        rows.append([eps, err])
    rep.tables["transference"] = (["eps", "error_ratio"], rows)
    rep.constants["transference_trend"] = [r[1] for r in rows]
    rep.check("transference_finite", all(np.isfinite(r[1]) for r in rows), rows[-1][1])
    return rep


# ---------------------------------------------------------------------------
# differentiation along variable hyperplanes
# ---------------------------------------------------------------------------


def _smooth_test_functions(spec: TorusSpec, count: int, rng) -> list[GridFunction]:
    """Band-limited core plus a smooth rapidly-decaying spectral tail."""
    shape = (spec.M,) * spec.n
    r = spec.freq_norm()
    out = []
    for _ in range(count):
        coeffs = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.exp(
            -(r**2)
        )
        g = GridFunction.from_spectrum(spec, coeffs)
        out.append(GridFunction.from_spectrum(spec, coeffs / g.l2_norm()))
    return out


def _field_assignments(spec: TorusSpec, count: int, n_dirs: int, rng) -> list[np.ndarray]:
    """Measurable direction assignments: index of sigma per lattice point."""
    shape = (spec.M,) * spec.n
    x = np.stack(np.meshgrid(*([spec.space_axis()] * spec.n), indexing="ij"), axis=-1)
    fields = []
    fields.append(rng.integers(0, n_dirs, size=shape))  # iid noise
    fields.append((np.sum(x, axis=-1) // 1).astype(int) % n_dirs)  # slabs
    fields.append(
        np.floor(np.linalg.norm(x - spec.L / 2, axis=-1)).astype(int) % n_dirs
    )  # rings
    cells = np.floor(x).astype(int)
    fields.append(np.sum(cells, axis=-1) % n_dirs)  # checkerboard
    while len(fields) < count:
        fields.append(rng.integers(0, n_dirs, size=shape))
    return fields[:count]


def cmd_differentiation(cfg: ExperimentConfig) -> RunReport:
    rep = RunReport("differentiation", cfg.resolved())
    spec = cfg.torus()
    rng = np.random.default_rng(cfg.seed)
    profile = BumpProfile(alpha=cfg.alpha)
    sigmas = direction_set(cfg.n, 8, cfg.alpha, kind=cfg.direction_kind, seed=cfg.seed)
    funcs = _smooth_test_functions(spec, cfg.num_functions, rng)
    fields = _field_assignments(spec, cfg.num_fields, len(sigmas), rng)
    ks = list(range(1, cfg.h_kmax + 1))

    # f constant: the average reproduces it exactly at every scale
    const = GridFunction(spec, np.ones((spec.M,) * spec.n))
    errs_const = max(
        float(np.max(np.abs(subspace_average(const, sigmas[0], 2.0**-k, profile).values - 1.0)))
        for k in ks
    )
    rep.check("constant_function_exact", errs_const <= 1e-12, errs_const)

    # single mode: error is |1 - gamma_hat(h |P_sigma xi0|)| exactly
    xi0 = np.zeros(cfg.n)
    xi0[0] = 1.5
    mode = GridFunction.single_mode(spec, xi0)
    worst_gap = 0.0
    for k in (1, 4):
        h = 2.0**-k
        avg = subspace_average(mode, sigmas[0], h, profile)
        measured = float(np.max(np.abs((avg - mode).values)))
        pn = float(np.sqrt(xi0 @ xi0 - (xi0 @ sigmas[0].normal) ** 2))
        closed = abs(1.0 - float(profile.gamma_hat(np.array([h * pn]))[0]))
        worst_gap = max(worst_gap, abs(measured - closed))
    rep.check("single_mode_closed_form", worst_gap <= 1e-9, worst_gap)

    rows = []
    monotone = True
    worst_pair = None
    for fi, f in enumerate(funcs):
        # averages for every (sigma, h) once per function
        avgs = {}
        for si, sg in enumerate(sigmas):
            pn = _projected_norm(spec, sg)
            for k in ks:
                sym = profile.gamma_hat(2.0**-k * pn).astype(np.complex128)
                avgs[si, k] = f.apply_symbol(sym).values
        for gi, assign in enumerate(fields):
            errs = []
            for k in ks:
                stack = np.stack([np.abs(avgs[si, k] - f.values) for si in range(len(sigmas))])
                pointwise = np.take_along_axis(stack, assign[None], axis=0)[0]
                errs.append(float(np.max(pointwise)))
            for k, err in zip(ks, errs):
                rows.append([fi, gi, k, 2.0**-k, err])
            for a, b in zip(errs, errs[1:]):
                if b > a * (1 + 1e-9) + 1e-15:
                    monotone = False
                    worst_pair = (fi, gi, a, b)
        # adversarial field: pointwise worst direction at every scale
        errs = []
        for k in ks:
            stack = np.stack([np.abs(avgs[si, k] - f.values) for si in range(len(sigmas))])
            errs.append(float(np.max(np.max(stack, axis=0))))
        for k, err in zip(ks, errs):
            rows.append([fi, -1, k, 2.0**-k, err])
        for a, b in zip(errs, errs[1:]):
            if b > a * (1 + 1e-9) + 1e-15:
                monotone = False
                worst_pair = (fi, -1, a, b)
    rep.tables["errors"] = (["function", "field", "k", "h", "sup_error"], rows)
    rep.check("sup_error_decreasing", monotone, worst_pair)
    return rep


# ---------------------------------------------------------------------------
# tiles and trees
# ---------------------------------------------------------------------------


def _lattice_direction_field(rng, extent: float = 15.0, step: float = 0.5):
    xs = np.arange(-extent, extent, step) + step / 2
    pts = np.stack(np.meshgrid(xs, xs, indexing="ij"), axis=-1).reshape(-1, 2)
    ys = rng.uniform(-0.3, 0.3, size=len(pts))
    normals = np.array([chart_lift([y]) for y in ys])
    mask = rng.uniform(size=len(pts)) < 0.7
    return tr.DirectionField(
        points=pts, normals=normals, mask=mask, cell_volume=step**2, max_tilt=1.0
    )


def cmd_tiles_trees(cfg: ExperimentConfig) -> RunReport:
    rep = RunReport("tiles_trees", cfg.resolved())
    rng = np.random.default_rng(cfg.seed)
    kappa = default_kappa(1)
    tiles = tr.generate_tile_collection(cfg.seed, cfg.tile_count)
    if not tiles:
        rep.check("empty_input", True, 0)
        return rep

    rep.check(
        "tile_scales_valid",
        all(1.0 - 1e-9 <= t.scl * t.Q.sidelength < 3.0 + 1e-9 for t in tiles),
        len(tiles),
    )

    coeffs = tr.CoefficientTable(
        {t: (float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.0, 1.0))) for t in tiles},
        M=100,
    )
    fld = _lattice_direction_field(rng)

    sd = tr.size_decompose(tiles, coeffs, kappa)
    in_size = tr.size(tiles, coeffs, kappa)
    out_size = tr.size(sd.small, coeffs, kappa) if sd.small else 0.0
    rep.check("size_halving", out_size <= in_size / math.sqrt(2.0) + 1e-12, out_size)
    recombined = sorted(
        [t for T in sd.trees for t in T.tiles] + list(sd.small), key=tr._tile_key
    )
    rep.check("size_partition", recombined == sorted(tiles, key=tr._tile_key), len(sd.trees))

    selected = list(sd.selected)
    if cfg.inject_fault == "strong-disjointness" and selected:
        selected.append(selected[0])
    ok, cex = tr.verify_strongly_disjoint(selected)
    rep.check("strong_disjointness", ok, None if ok else str(cex))

    dd = tr.density_decompose(tiles, fld, kappa)
    in_dense = max((tr.density(t, fld, tiles, kappa) for t in tiles), default=0.0)
    out_dense = max((tr.density(t, fld, dd.light, kappa) for t in dd.light), default=0.0)
    rep.check("density_halving", out_dense <= in_dense / 2.0 + 1e-12, out_dense)
    dd_tiles = sorted([t for T in dd.trees for t in T.tiles] + list(dd.light), key=tr._tile_key)
    rep.check("density_partition", dd_tiles == sorted(tiles, key=tr._tile_key), len(dd.trees))

    # single-tree model form against size * dense * |R_T|
    ratios = []
    for T in sd.trees:
        ts = list(T.tiles)
        sz = tr.size(ts, coeffs, kappa)
        dn = max((tr.density(t, fld, ts, kappa) for t in ts), default=0.0)
        bound = sz * dn * T.measure
        if bound > 0:
            ratios.append(tr.model_form(ts, coeffs) / bound)
    rep.constants["model_form_constants"] = ratios
    rep.check(
        "model_form_finite",
        all(np.isfinite(r) for r in ratios),
        max(ratios) if ratios else 0.0,
    )

    stop = tr.stopping_decomposition(tiles, coeffs, fld, kappa)
    rep.constants["carleson_sum"] = stop["carleson_sum"]
    rep.check("carleson_sum_finite", np.isfinite(stop["carleson_sum"]), stop["carleson_sum"])

    rep.tables["decomposition"] = (
        ["what", "trees", "value"],
        [
            ["size", len(sd.trees), float(out_size)],
            ["density", len(dd.trees), float(out_dense)],
            ["stopping_levels", len(stop["levels"]), float(stop["carleson_sum"])],
        ],
    )
    return rep


# ---------------------------------------------------------------------------
# frame identity
# ---------------------------------------------------------------------------


def cmd_frame(cfg: ExperimentConfig) -> RunReport:
    rep = RunReport("frame", cfg.resolved())
    spec = cfg.torus()
    profile = BumpProfile(alpha=cfg.alpha)
    rows = []
    worst = 0.0
    all_fit = True
    for s in cfg.scales:
        net = wp.build_net(s, d=cfg.d, alpha=cfg.alpha, kappa=cfg.kappa)
        pou = wp.partition_of_unity(net)
        out = wp.frame_verify(s, pou, spec, profile, seed=cfg.seed, trials=cfg.trials)
        fit = bool(out["support_fit_ok"])
        all_fit = all_fit and fit
        err = float(out.get("max_rel_error", np.inf)) if fit else float("inf")
        off = float(out.get("offband_residual", np.inf)) if fit else float("inf")
        worst = max(worst, err)
        rows.append([s, len(pou), out.get("active", 0), err, off])
    rep.tables["frame"] = (
        ["s", "net_size", "active", "max_rel_error", "offband_residual"],
        rows,
    )
    rep.check("support_fit", all_fit, all_fit)
    rep.check("frame_identity", worst <= 1e-6, worst)
    rep.check("offband_annihilated", max(r[4] for r in rows) <= 1e-8, max(r[4] for r in rows))
    return rep


COMMANDS = {
    "geometry-selftest": cmd_geometry_selftest,
    "logn": cmd_logn,
    "carleson": cmd_carleson,
    "differentiation": cmd_differentiation,
    "tiles-trees": cmd_tiles_trees,
    "frame": cmd_frame,
}
