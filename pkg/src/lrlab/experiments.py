"""Experiment drivers: bound curves, exact tip dynamics and figure reproductions.

Each driver writes one CSV per curve into an output directory and returns a
RunReport (also written as ``report.json``) with arrival times, named ratios,
checks, timings and every default that was applied.
"""

import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bounds import (
    BoundCurve,
    arrival_time,
    chain_parameters,
    crossing_time,
    interaction_norm_xi,
    is_monotone,
    new_bound_1d,
    new_bound_pathsum,
    old_bound,
    optimize_xi,
    set_factor,
    tilde_bound,
    tilde_bound_conv,
)
from .config import format_config, parse_config, preset_text
from .constants import HBAR, beta_from_temperature
from .dynamics import commutator_norm_series, estimate_velocity, evolve_observable, gibbs_state, signal_arrival
from .errors import DomainError, LRLabError
from .io import emit_csv, emit_svg, finite_or_none
from .lattice import Lattice
from .model import TipParameters, assemble_hamiltonian, nearest_neighbor_system, tip_operator
from .spin import embed

FIGURES = ("fig2", "fig3a", "fig3b")
FIG2_OLD_BAND = (0.15, 0.40)
FIG2_NEW_BAND = (18.0, 30.0)
FIG2_RATIO_BAND = (50.0, 200.0)
FIG3A_RATIO_BAND = (2.5, 6.0)
RISE_LEVEL = 1e-3
DOMINANCE_ATOL = 1e-9
EPSILON_SWEEP = (0.005, 0.01, 0.05)


@dataclass
class RunReport:
    figure: str
    config: str
    arrivals: dict = field(default_factory=dict)
    ratios: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    defaults_applied: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    files: list = field(default_factory=list)
    seed: int = None
    versions: dict = field(default_factory=dict)

    def add_ratio(self, name, numerator, denominator, thresholds):
        num, den = self.arrivals[numerator], self.arrivals[denominator]
        value = num / den if (num is not None and den) else None
        self.ratios.append(
            {"name": name, "numerator": numerator, "denominator": denominator, "value": value, "thresholds": thresholds}
        )
        return value

    def ratio(self, name):
        for r in self.ratios:
            if r["name"] == name:
                return r["value"]
        raise KeyError(name)

    def write(self, path):
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _versions():
    return {"lrlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def spin_label(s):
    return str(Fraction(s)).replace("/", "_")


def build_system(cfg, s):
    sc = cfg.system
    B = sc.B if any(sc.B) else None
    return nearest_neighbor_system(Lattice(sc.extent), s, sc.J, sc.K, B, sc.g_factor)


def tip_parameters(cfg, s, norm=None):
    t = cfg.tip
    if t.g is not None:
        return TipParameters(t.g, t.current, t.polarization, t.kappa, t.height, t.site, t.m_tip)
    return TipParameters.from_norm(norm, s, t.site, t.m_tip)


def tip_norms(cfg, s, exact=False):
    """||P|| values in meV; with raw tip parameters there is exactly one."""
    if cfg.tip.g is not None:
        return (tip_parameters(cfg, s).prefactor * s,)
    return cfg.exact_norms if exact else cfg.tip.norms


def beta_of(cfg):
    th = cfg.thermal
    return th.beta if th.beta is not None else beta_from_temperature(th.temperature)


class _Run:
    """Shared bookkeeping: timing, error capture and CSV emission for one report."""

    def __init__(self, figure, cfg, outdir, seed=None):
        self.cfg = cfg
        self.outdir = Path(outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.report = RunReport(
            figure, format_config(cfg), defaults_applied=list(cfg.defaults_applied), seed=seed, versions=_versions()
        )
        self.plots = {}

    def attempt(self, name, fn):
        t0 = time.perf_counter()
        try:
            return fn()
        except (LRLabError, np.linalg.LinAlgError, MemoryError) as exc:
            self.report.errors.append({"curve": name, "error": type(exc).__name__, "message": str(exc)})
            return None
        finally:
            self.report.timings[name] = round(time.perf_counter() - t0, 6)

    def emit(self, name, obj, plot=None):
        path = emit_csv(obj, self.outdir / f"{name}.csv")
        self.report.files.append(path.name)
        if plot:
            self.plots.setdefault(plot, []).append((name, obj.times, obj.values))
        return path

    def finish(self):
        if self.cfg.output.svg:
            for plot, curves in self.plots.items():
                path = emit_svg(curves, self.outdir / f"{plot}.svg", title=plot, log_y=plot.startswith("log"))
                self.report.files.append(path.name)
        self.report.write(self.outdir / "report.json")
        return self.report


# -- curve builders ----------------------------------------------------------


def bound_curve(kind, cfg, system, times, norm_p=None):
    """One bound curve for ``system`` between the configured source and target."""
    b = cfg.bounds
    src, tgt = b.source, cfg.target
    s_src, s_tgt = system.sz_norm(src), system.sz_norm(tgt)
    dist = system.lattice.distance(src, tgt)
    params = {"s": max(system.spins), "J": cfg.system.J, "source": src, "target": tgt, "distance": dist,
              "clamp": b.clamp}
    if kind == "old_L":
        xi = b.xi if b.xi is not None else optimize_xi(system, src, tgt, horizon=float(times[-1]), threshold_fraction=b.threshold)
        norm_xi = interaction_norm_xi(system, xi)
        params.update(xi=xi, norm_xi_meV=norm_xi)
        return BoundCurve.sample(kind, times, lambda t: old_bound(t, src, tgt, system, xi, b.clamp, norm_xi),
                                 2 * s_src * s_tgt, params)
    if kind == "new_B_pathsum":
        params.update(tol=b.tol)
        return BoundCurve.sample(kind, times, lambda t: new_bound_pathsum(t, [tgt], [src], system, b.tol, clamp=b.clamp),
                                 2 * s_src * s_tgt, params)
    J, s = chain_parameters(system)
    d = system.lattice.dim
    if kind == "new_B_1d":
        params.update(J=J, s=s, d=d, v_meV=4 * math.e * (2 * d - 1) * J * s**2)
        return BoundCurve.sample(kind, times, lambda t: new_bound_1d(t, dist, J, s, d, b.clamp), 2 * s**2, params)
    norm_a = system.sz_norm(cfg.observe_site)
    params.update(norm_p_meV=norm_p, norm_a=norm_a, observe_site=cfg.observe_site)
    if kind == "tilde_B":
        return BoundCurve.sample(kind, times, lambda t: tilde_bound(t, norm_p, norm_a), norm_a, params)
    if kind == "tilde_B_conv":
        tip_dist = system.lattice.distance(cfg.tip.site, cfg.observe_site)

        def inner(t):
            return new_bound_1d(t, tip_dist, J, s, d, b.clamp)

        return BoundCurve.sample(kind, times, lambda t: tilde_bound_conv(t, norm_p, norm_a, inner), norm_a, params)
    raise DomainError(f"unknown bound kind {kind!r}")


class ExactTipRun:
    """Gibbs state of H and tip-perturbed evolution of S^z at the observed site."""

    def __init__(self, cfg, system):
        self.cfg = cfg
        self.system = system
        self.H = assemble_hamiltonian(system)
        self.beta = beta_of(cfg)
        self.state = gibbs_state(self.H, self.beta)
        self.A = embed(system.sz(cfg.observe_site), system)

    def series(self, norm_p, times):
        s_tip = self.system.spins[self.cfg.tip.site]
        params = tip_parameters(self.cfg, s_tip, norm_p)
        P = tip_operator(self.system, params)
        prov = {"norm_p_meV": norm_p, "m_tip": params.m_tip, "tip_site": params.site,
                "observe_site": self.cfg.observe_site, "temperature_K": self.cfg.thermal.temperature}
        return evolve_observable(self.H, P, self.state, self.A, times, self.cfg.dynamics.method,
                                 f"Sz[{self.cfg.observe_site}]", prov)

    def velocity(self, norm_p, times):
        s_tip = self.system.spins[self.cfg.tip.site]
        P = tip_operator(self.system, tip_parameters(self.cfg, s_tip, norm_p))
        eps = self.cfg.dynamics.epsilon * max(self.system.spins)
        return estimate_velocity(self.H, P, self.state, self.system, self.cfg.dynamics.velocity_sites, eps, times,
                                 source=self.cfg.tip.site)


def _tilde_dominance(series, norm_p, norm_a):
    dev = np.abs(series.values - series.values[0])
    slack = tilde_bound(series.times, norm_p, norm_a) - dev
    return float(slack.min())


# -- drivers -----------------------------------------------------------------


def run_bounds(cfg, outdir, figure="bounds", seed=None):
    run = _Run(figure, cfg, outdir, seed)
    _bounds_into(run, cfg)
    return run.finish()


def _bounds_into(run, cfg):
    times = cfg.time.grid()
    for s in cfg.system.spins:
        tag = f"s{spin_label(s)}"
        system = run.attempt(f"system_{tag}", lambda: build_system(cfg, s))
        if system is None:
            continue
        for kind in cfg.bounds.kinds:
            norms = tip_norms(cfg, s) if kind.startswith("tilde") else (None,)
            for p in norms:
                name = f"{kind}_{tag}" + (f"_P{p:g}" if p is not None else "")
                curve = run.attempt(name, lambda: bound_curve(kind, cfg, system, times, p))
                if curve is None:
                    continue
                run.emit(name, curve, plot=f"bounds_{tag}")
                run.report.arrivals[name] = finite_or_none(arrival_time(curve, cfg.bounds.threshold))
                run.report.checks[f"monotone_{name}"] = is_monotone(curve.values)
        old, new = f"old_L_{tag}", f"new_B_1d_{tag}"
        if old in run.report.arrivals and new in run.report.arrivals:
            run.report.add_ratio(f"arrival(new_B_1d)/arrival(old_L) {tag}", new, old,
                                 {"threshold_fraction": cfg.bounds.threshold})


def run_evolve(cfg, outdir, figure="evolve", seed=None):
    run = _Run(figure, cfg, outdir, seed)
    _evolve_into(run, cfg)
    return run.finish()


def _evolve_into(run, cfg, ratio_band=None):
    times = cfg.time.grid()
    for s in cfg.system.spins:
        tag = f"s{spin_label(s)}"
        system = build_system(cfg, s)
        bname = f"new_B_1d_{tag}"
        bound = run.attempt(bname, lambda: bound_curve("new_B_1d", cfg, system, times))
        if bound is not None:
            run.emit(bname, bound, plot=f"exact_{tag}")
            run.report.arrivals[bname] = finite_or_none(arrival_time(bound, cfg.bounds.threshold))
        exact = run.attempt(f"gibbs_{tag}", lambda: ExactTipRun(cfg, system))
        if exact is None:
            continue
        eps = cfg.dynamics.epsilon * system.sz_norm(cfg.observe_site)
        # tilde dominance is checked for every tip norm, ratios only for the dynamics norms
        ratio_norms = tip_norms(cfg, s, exact=True)
        for p in sorted(set(ratio_norms) | set(tip_norms(cfg, s))):
            name = f"exact_Sz{cfg.observe_site}_{tag}_P{p:g}"
            series = run.attempt(name, lambda: exact.series(p, times))
            if series is None:
                continue
            run.emit(name, series, plot=f"exact_{tag}")
            run.report.arrivals[name] = finite_or_none(signal_arrival(series, eps))
            s_obs = system.sz_norm(cfg.observe_site)
            run.report.checks[f"epsilon_sensitivity_{name}"] = {
                f"{f:g}": finite_or_none(signal_arrival(series, f * s_obs)) for f in EPSILON_SWEEP
            }
            slack = _tilde_dominance(series, p, system.sz_norm(cfg.observe_site))
            run.report.checks[f"tilde_dominance_slack_{name}"] = slack
            run.report.checks[f"tilde_dominates {tag} P={p:g}"] = slack >= -DOMINANCE_ATOL
            if bound is not None and p in ratio_norms:
                value = run.report.add_ratio(
                    f"arrival(exact)/arrival(new_B_1d) {tag} P={p:g}", name, bname,
                    {"epsilon": eps, "threshold_fraction": cfg.bounds.threshold},
                )
                if ratio_band is not None:
                    run.report.checks[f"ratio_in_band {tag} P={p:g}"] = (
                        value is not None and ratio_band[0] <= value <= ratio_band[1]
                    )
            if cfg.dynamics.velocity_sites:
                fit = run.attempt(f"velocity_{tag}_P{p:g}", lambda: exact.velocity(p, times))
                if fit is not None:
                    fit, arrivals = fit
                    run.report.checks[f"velocity_{tag}_P{p:g}"] = {
                        "speed_sites_per_ps": fit.speed, "speed_meV_site": fit.speed_mev_site, "r2": fit.r2,
                        "arrivals": [finite_or_none(a) for a in arrivals],
                        "bound_speed_sites_per_ps": (bound.params["v_meV"] / HBAR) if bound is not None else None,
                    }
        del exact


def run_commutator(cfg, outdir, figure="commutator", seed=None):
    """Exact ||[S^z_source(t), S^z_target]|| against every configured bound."""
    run = _Run(figure, cfg, outdir, seed)
    times = cfg.time.grid()
    for s in cfg.system.spins:
        tag = f"s{spin_label(s)}"
        system = build_system(cfg, s)
        src, tgt = cfg.bounds.source, cfg.target

        def exact():
            H = assemble_hamiltonian(system)
            return commutator_norm_series(H, system.sz(src), system.sz(tgt), times, system)

        name = f"commutator_{tag}"
        series = run.attempt(name, exact)
        if series is None:
            continue
        run.emit(name, series, plot=f"log_commutator_{tag}")
        for kind in cfg.bounds.kinds:
            if kind.startswith("tilde"):
                continue
            cname = f"{kind}_{tag}"
            curve = run.attempt(cname, lambda: bound_curve(kind, cfg, system, times))
            if curve is None:
                continue
            run.emit(cname, curve, plot=f"log_commutator_{tag}")
            run.report.checks[f"min_slack_{cname}"] = float(np.min(curve.values - series.values))
    return run.finish()


def _fig2(run, cfg):
    _bounds_into(run, cfg)
    run.report.checks["set_factor_s1_2_xi1"] = set_factor(2, 0.5, 1.0, 1)
    # the reference bands are stated for the spin-1/2 chain only
    bands = {"old_L_s1_2": FIG2_OLD_BAND, "new_B_1d_s1_2": FIG2_NEW_BAND}
    for name, (lo, hi) in bands.items():
        a = run.report.arrivals.get(name)
        run.report.checks[f"in_band {name}"] = a is not None and lo <= a <= hi
    name = "arrival(new_B_1d)/arrival(old_L) s1_2"
    if any(r["name"] == name for r in run.report.ratios):
        v = run.report.ratio(name)
        run.report.checks[f"in_band {name}"] = v is not None and FIG2_RATIO_BAND[0] <= v <= FIG2_RATIO_BAND[1]


def _fig3b(run, cfg):
    times = cfg.time.grid()
    for s in cfg.system.spins:
        tag = f"s{spin_label(s)}"
        system = build_system(cfg, s)
        bname = f"new_B_1d_{tag}"
        bound = run.attempt(bname, lambda: bound_curve("new_B_1d", cfg, system, times))
        if bound is None:
            continue
        run.emit(bname, bound, plot=f"fig3b_{tag}")
        b_rise = crossing_time(bound.times, bound.values, RISE_LEVEL, bound.func)
        run.report.arrivals[f"rise_{bname}"] = finite_or_none(b_rise)
        previous = None
        rises = []
        for p in sorted(tip_norms(cfg, s)):
            for kind in ("tilde_B", "tilde_B_conv"):
                name = f"{kind}_{tag}_P{p:g}"
                curve = run.attempt(name, lambda: bound_curve(kind, cfg, system, times, p))
                if curve is None:
                    continue
                run.emit(name, curve, plot=f"fig3b_{tag}" if kind == "tilde_B" else f"fig3b_conv_{tag}")
                rise = crossing_time(curve.times, curve.values, RISE_LEVEL, curve.func)
                run.report.arrivals[f"rise_{name}"] = finite_or_none(rise)
                if kind == "tilde_B":
                    rises.append(rise)
                    if previous is not None:
                        run.report.checks[f"ordered_in_P {tag} P={p:g}"] = bool(np.all(curve.values[1:] >= previous[1:]))
                    previous = curve.values
        run.report.checks[f"tilde_rises_earlier {tag}"] = bool(rises) and all(r < b_rise for r in rises)


def load_preset(figure, fast=False):
    name = {"fig2": "fig2", "fig3a": "fig3", "fig3b": "fig3"}[figure]
    if fast and figure != "fig2":
        name += "_fast"
    return parse_config(preset_text(name))


def run_reproduce(figure, outdir, cfg=None, fast=False, seed=None):
    """Reproduce one figure: fig2 (old vs new bound), fig3a (bound vs exact), fig3b (bound vs tilde bounds)."""
    if figure not in FIGURES:
        raise DomainError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    cfg = load_preset(figure, fast) if cfg is None else cfg
    run = _Run(figure, cfg, outdir, seed)
    if figure == "fig2":
        _fig2(run, cfg)
    elif figure == "fig3a":
        # the ratio band refers to the spin-1 system; the fast variant only checks dominance
        _evolve_into(run, cfg, ratio_band=None if fast else FIG3A_RATIO_BAND)
    else:
        _fig3b(run, cfg)
    return run.finish()
