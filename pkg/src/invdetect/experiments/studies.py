"""Assemble operators, systems and simulators from an :class:`ExperimentConfig`."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from ..bounds import (
    boundary_case1_asymptotic,
    boundary_case1_nonasymptotic,
    d_alpha_delta,
    upper_bound_case2,
)
from ..detection import TestOutcome, chi2_statistic
from ..dictionaries import anomaly_system, vaguelettes_convolution, vaguelettes_integration, vaguelettes_radon
from ..gram import GramVariant, frobenius, gram
from ..operators import ConvolutionKernel, ForwardOperator, radon_forward
from ..sampling import SampledFunction, make_uniform_grid, product_grid, replication_rng, standard_noise
from ..wavelets import build_index_set_interval, build_index_set_square_2d, daubechies_cascade, taps_from_name
from .coherence import deconv_coherence_experiment
from .config import ExperimentConfig, parse_config
from .power import (
    Chi2PairingSimulator,
    GridSimulator,
    PowerCurve,
    SupPairingSimulator,
    find_delta_at_power,
    sphere_coefficients,
)

__all__ = [
    "make_basis",
    "build_operator",
    "build_system",
    "make_simulator",
    "beta_star_case1",
    "beta_star_case2",
    "StudyResult",
    "run_study",
    "radon_scenario_figure1",
    "ellipse_phantom",
]

_BASES = {}
_SIMULATORS = {}


def make_basis(cfg: ExperimentConfig):
    d = cfg.dictionary
    key = (taps_from_name(d["family"]), d.get("levels", 12))
    if key not in _BASES:
        _BASES[key] = daubechies_cascade(*key)
    return _BASES[key]


def build_operator(cfg: ExperimentConfig) -> ForwardOperator:
    g = cfg.grid
    if cfg.study == "integration":
        return ForwardOperator.integration(make_uniform_grid(0.0, 1.0, g["n"]))
    if cfg.study == "convolution":
        k = cfg.kernel
        return ForwardOperator.periodic_convolution(make_uniform_grid(0.0, 1.0, g["n"]), ConvolutionKernel.power_decay(k["C"], k["a"]))
    if cfg.study in ("radon", "figure1"):
        side = make_uniform_grid(-0.5, 0.5, g["image"])
        image = product_grid(side, side)
        t = make_uniform_grid(g["t_min"], g["t_max"], g["t"])
        theta = make_uniform_grid(0.0, math.pi, g["theta"])
        return ForwardOperator.radon(image, t, theta, radius=max(abs(g["t_min"]), abs(g["t_max"]), 1 / math.sqrt(2)))
    raise ValueError(f"study {cfg.study!r} has no forward operator")


def build_system(cfg: ExperimentConfig, j: int | None = None):
    basis = make_basis(cfg)
    j = cfg.dictionary["j"] if j is None else j
    op = build_operator(cfg)
    if cfg.study == "integration":
        idx = build_index_set_interval(basis, j)
        if cfg.test == "chi2":
            return vaguelettes_integration(basis, idx, op.input_grid)
        return anomaly_system(op, basis, idx)
    if cfg.study == "convolution":
        return vaguelettes_convolution(op.params["kernel"], basis, j, op.input_grid)
    if cfg.study in ("radon", "figure1"):
        return vaguelettes_radon(basis, build_index_set_square_2d(basis, j), op)
    raise ValueError(f"study {cfg.study!r} has no dictionary system")


def make_simulator(cfg: ExperimentConfig, system=None, threads: int = 1, j: int | None = None):
    """Power simulator for the config; cached per config hash and scale."""
    key = (cfg.config_hash(), j)
    if system is None and key in _SIMULATORS:
        return _SIMULATORS[key]
    system = build_system(cfg, j) if system is None else system
    common = dict(sigma=cfg.sigma, alpha=cfg.alpha, field=cfg.field, replications=cfg.replications, seed=cfg.seed)
    q = cfg.quantile
    if cfg.mode == "grid":
        route = "images" if cfg.study in ("radon", "figure1") else "apply"
        sim = GridSimulator(system, cfg.test, mc_draws=q["mc_draws"], route=route, **common)
    elif cfg.test == "sup":
        sim = SupPairingSimulator(system, threads=threads, **common)
    else:
        sim = Chi2PairingSimulator(system, mc_draws=q["mc_draws"], quantile_seed=q["seed"], threads=threads, **common)
    sim.system = system
    _SIMULATORS[key] = sim
    return sim


def beta_star_case1(cfg: ExperimentConfig, delta: float) -> float:
    """Mean type-II error of the sup test over the anomalies ``delta u_k / ||A u_k||``."""
    if cfg.test != "sup":
        cfg = dataclasses.replace(cfg, test="sup", alternative="per_anomaly_mean")
    return 1.0 - make_simulator(cfg).power(delta).power


def beta_star_case2(cfg: ExperimentConfig, delta: float) -> float:
    """Type-II error of the chi-squared test averaged over the uniform sphere."""
    if cfg.test != "chi2":
        cfg = dataclasses.replace(cfg, test="chi2", alternative="uniform_sphere")
    return 1.0 - make_simulator(cfg).power(delta).power


@dataclasses.dataclass
class StudyResult:
    curve: PowerCurve
    summary: dict
    sinogram: SampledFunction | None = None


def _search(cfg, sim):
    s = cfg.search
    return find_delta_at_power(sim.power, s["target"], s["delta_start"], s["delta_max"], s["rel_tol"], s["max_iter"])


def _case2_bounds(cfg, sim) -> dict:
    """Upper bound at total error ``2 alpha`` (type I and type II both at most alpha)."""
    Xi = sim.Xi if hasattr(sim, "Xi") else gram(sim.system, GramVariant.XI)
    fro = frobenius(Xi)
    out = {"frobenius_xi": fro, "N": sim.system.N}
    if 2 * cfg.alpha < 1:
        out["total_error"] = 2 * cfg.alpha
        out["d_alpha_delta"] = d_alpha_delta(cfg.alpha, 2 * cfg.alpha)
        out["upper_bound_case2"] = upper_bound_case2(cfg.sigma, fro, cfg.alpha, 2 * cfg.alpha, cfg.field)
    return out


def ellipse_phantom(grid) -> np.ndarray:
    """A few overlapping ellipses; a stand-in reference image."""
    X, Y = np.meshgrid(grid.axes[0], grid.axes[1], indexing="ij")
    out = np.zeros(grid.shape)
    for (cx, cy, a, b, val) in ((0, 0, 0.42, 0.46, 1.0), (0, -0.02, 0.38, 0.42, -0.6), (0.1, 0.05, 0.08, 0.15, 0.3), (-0.12, 0.1, 0.1, 0.07, 0.3)):
        out[((X - cx) / a) ** 2 + ((Y - cy) / b) ** 2 <= 1] += val
    return out


def _sinogram(cfg, sim, delta) -> SampledFunction:
    """Noisy sinogram of the phantom plus one uniform-sphere distortion of size ``delta``."""
    system = sim.system
    op = system.operator
    ref = radon_forward(SampledFunction(op.input_grid, ellipse_phantom(op.input_grid)), op.params["t_grid"], op.params["theta_grid"], op.params["radius"])
    c = sphere_coefficients(replication_rng(cfg.seed, 0, 1), system.lam, delta, cfg.field)
    g = op.output_grid
    noise = cfg.sigma * np.sqrt(g.n / g.volume) * standard_noise(replication_rng(cfg.seed, 0, 2), g.n, cfg.field)
    return SampledFunction(g, ref.flat + c @ system.images + noise)


def run_study(cfg: ExperimentConfig, threads: int = 1) -> StudyResult:
    """Run every piece the config asks for and collect a JSON-able summary."""
    summary = {"study": cfg.study, "test": cfg.test, "mode": cfg.mode}
    if cfg.study == "coherence":
        return _run_coherence(cfg, summary)
    sim = make_simulator(cfg, threads=threads)
    system = sim.system
    summary["N"] = system.N
    summary["family"] = f"{system.info.get('family')} ({system.info.get('taps')} taps)"
    summary["threshold"] = float(sim.estimator.threshold_ if hasattr(sim, "estimator") else sim.threshold)
    points = [sim.power(d) for d in cfg.delta_grid]
    curve = PowerCurve.from_points(points, cfg.config_hash())
    summary["power_monotone_2se"] = curve.is_monotone() if points else None
    if cfg.search and cfg.study != "figure1":
        est = _search(cfg, sim)
        summary["delta_at_target"] = est.as_dict()
    if cfg.test == "sup":
        summary["case1_nonasymptotic_bound"] = boundary_case1_nonasymptotic(cfg.sigma, system.N, cfg.alpha, cfg.field)
        summary["case1_asymptotic_bound"] = boundary_case1_asymptotic(cfg.sigma, system.N)
    else:
        summary.update(_case2_bounds(cfg, sim))
    if cfg.scan:
        summary["scan"] = _run_scan(cfg, threads)
    if cfg.study == "figure1":
        # the scenario amplitude is the smallest positive delta of the grid
        positive = sorted((p for p in points if p.delta > 0), key=lambda p: p.delta)
        if positive:
            p = positive[0]
            summary["figure1"] = {
                "delta": p.delta,
                "power": p.power,
                "std_err": p.std_err,
                "meets_0.95_within_3se": p.power >= 0.95 - 3 * p.std_err,
                "delta_above_upper_bound": p.delta >= summary.get("upper_bound_case2", np.inf),
            }
    sino = None
    if cfg.outputs.get("sinogram") and cfg.study in ("radon", "figure1"):
        d = max(cfg.delta_grid) if cfg.delta_grid else summary.get("delta_at_target", {}).get("delta", 1.0)
        sino = _sinogram(cfg, sim, d)
    return StudyResult(curve, summary, sino)


def _run_scan(cfg, threads):
    rows = []
    for j in cfg.scan["j_values"]:
        sim = make_simulator(cfg, threads=threads, j=j)
        est = _search(cfg, sim)
        N = sim.system.N
        row = {"j": j, "N": N, "delta": est.delta, "std_err": est.std_err}
        if cfg.test == "sup":
            row["nonasymptotic_bound"] = boundary_case1_nonasymptotic(cfg.sigma, N, cfg.alpha, cfg.field)
            row["asymptotic_bound"] = boundary_case1_asymptotic(cfg.sigma, N)
        rows.append(row)
        _SIMULATORS.pop((cfg.config_hash(), j), None)
    return rows


def _run_coherence(cfg, summary):
    basis = make_basis(cfg)
    k = cfg.kernel
    if "a" in k and "width" not in k:
        kernel = ConvolutionKernel.power_decay(k.get("C", 1.0), k["a"])
    else:
        kernel = ConvolutionKernel.periodic_gaussian(k.get("width", 0.1))
    c = cfg.coherence
    reports = [deconv_coherence_experiment(basis, kernel, j, c["n_shifts"], c["n"]).as_dict() for j in c["j_values"]]
    summary["coherence"] = reports
    inf = [r["inf_correlation"] for r in reports]
    summary["increasing_in_j"] = bool(all(b > a for a, b in zip(inf, inf[1:])))
    return StudyResult(PowerCurve([], [], [], []), summary)


def radon_scenario_figure1(seed: int = 0, delta: float = 264.0, replications: int = 1000, fast: bool = True, threads: int = 1):
    """Chi-squared test on one distorted-image observation plus the power report.

    Returns ``(outcome, report)``: the single-run :class:`TestOutcome` and a
    dict with power over ``replications`` and the upper-bound check.
    """
    text = f"study: figure1\nseed: {int(seed)}\nreplications: {int(replications)}\ndelta_grid: [{float(delta)}]\n"
    cfg = parse_config(text, "<figure1>", fast=fast)
    result = run_study(cfg, threads)
    sim = make_simulator(cfg)
    system = sim.system
    c = sphere_coefficients(replication_rng(seed, 0, 1), system.lam, delta, cfg.field)
    g = system.operator.output_grid
    Y = c @ system.images + cfg.sigma * np.sqrt(g.n / g.volume) * standard_noise(replication_rng(seed, 0, 2), g.n, cfg.field)
    stat = chi2_statistic(Y, system)
    outcome = TestOutcome(stat, sim.threshold, stat > sim.threshold, cfg.quantile["seed"], cfg.quantile["mc_draws"])
    return outcome, result.summary
