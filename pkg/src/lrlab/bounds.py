"""Lieb-Robinson bound families and arrival times read off bound curves.

Times are in ps. Every formula written for natural units is evaluated at
t/HBAR, so rates in meV turn into rates per ps.

Curve kinds:

* ``old_L`` -- exponential bound with the xi-weighted interaction norm
* ``new_B_pathsum`` -- path sum over the interaction hypergraph
* ``new_B_1d`` -- closed form for nearest-neighbour chains
* ``tilde_B`` -- bound on the tip-induced change of an expectation value
* ``tilde_B_conv`` -- the same bound before the time integral is collapsed
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .constants import HBAR
from .errors import DomainError, ResourceError
from .lattice import DEFAULT_NODE_BUDGET, branching_factor, path_log_weight_sums

KINDS = ("old_L", "new_B_pathsum", "new_B_1d", "tilde_B", "tilde_B_conv")


@dataclass(eq=False)
class BoundCurve:
    """A bound sampled on a time grid.

    ``cap`` is the reference value arrival thresholds are measured against.
    ``func`` re-evaluates the bound off-grid and is used to refine crossings.
    """

    kind: str
    times: np.ndarray
    values: np.ndarray
    cap: float
    params: dict = field(default_factory=dict)
    func: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown bound kind {self.kind!r}")
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise DomainError("times and values must be 1-D arrays of equal length")
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("curve times must be strictly increasing")

    @classmethod
    def sample(cls, kind, times, func, cap, params=None):
        times = np.asarray(times, dtype=float)
        return cls(kind, times, np.asarray(func(times), dtype=float), cap, dict(params or {}), func)


def _scaled_time(t):
    return np.abs(np.asarray(t, dtype=float)) / HBAR


def _clamp(values, cap, clamp):
    return np.minimum(values, cap) if clamp else values


def _scalar_out(t, values):
    return float(np.ravel(values)[0]) if np.ndim(t) == 0 else values


# -- old bound ---------------------------------------------------------------


def set_factor(size, spins, xi, diameter):
    """|X| * prod_i (2 s_i + 1)^2 * exp(xi D(X)) for a support of given size and diameter."""
    if np.isscalar(spins):
        spins = (spins,) * size
    return size * math.prod((2 * s + 1) ** 2 for s in spins) * math.exp(xi * diameter)


def interaction_norm_xi(system, xi):
    """sup_x sum_{X containing x} |X| (2s+1)^(2|X|) e^(xi D(X)) ||Phi(X)||, in meV."""
    if not xi > 0:
        raise DomainError(f"xi must be positive, got {xi}")
    per_site = np.zeros(system.n_sites)
    for t in system.terms:
        spins = [system.spins[i] for i in t.support]
        f = set_factor(len(t.support), spins, xi, system.lattice.diameter(t.support)) * t.norm
        per_site[list(t.support)] += f
    return float(per_site.max()) if per_site.size else 0.0


def old_bound(t, x, y, system, xi, clamp=True, norm_xi=None):
    """2 ||S^z_x|| ||S^z_y|| exp(-xi |x-y| + 2 ||Phi||_xi |t| / hbar), optionally capped."""
    ab = system.sz_norm(x) * system.sz_norm(y)
    dist = system.lattice.distance(x, y)
    norm_xi = interaction_norm_xi(system, xi) if norm_xi is None else norm_xi
    with np.errstate(over="ignore"):
        vals = 2 * ab * np.exp(-xi * dist + 2 * norm_xi * _scaled_time(t))
    return _scalar_out(t, _clamp(vals, 2 * ab, clamp))


def old_bound_arrival(xi, dist, norm_xi, threshold_fraction=0.05):
    """Closed-form time at which the old bound reaches ``threshold_fraction`` of its cap."""
    if norm_xi <= 0:
        return math.inf
    return max(0.0, HBAR * (xi * dist + math.log(threshold_fraction)) / (2 * norm_xi))


def _golden_max(f, lo, hi, tol):
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (a + b) / 2


def _is_unimodal(vals):
    # allow flat stretches; count strict direction changes from rising to falling
    diffs = np.sign(np.diff(vals))
    diffs = diffs[diffs != 0]
    if diffs.size == 0:
        return False
    falls = np.flatnonzero(diffs < 0)
    return falls.size == 0 or np.all(diffs[falls[0]:] < 0)


def optimize_xi(system, x, y, horizon, threshold_fraction=0.05, xi_range=(0.01, 10.0), tol=1e-3):
    """xi that makes the old bound tightest, i.e. latest to reach the threshold.

    Arrival times are clipped to ``horizon``. Golden-section search on
    ``xi_range``; if a coarse scan shows the objective is not unimodal, the
    argmax of a 200-point grid is returned instead.
    """
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    if x == y:
        raise DomainError("old bound needs distinct sites")
    dist = system.lattice.distance(x, y)

    def arrival(xi):
        return min(horizon, old_bound_arrival(xi, dist, interaction_norm_xi(system, xi), threshold_fraction))

    coarse = np.linspace(*xi_range, 25)
    if _is_unimodal([arrival(v) for v in coarse]):
        return _golden_max(arrival, *xi_range, tol)
    grid = np.linspace(*xi_range, 200)
    return float(grid[int(np.argmax([arrival(v) for v in grid]))])


# -- path-sum bound ----------------------------------------------------------


def _log_series_terms(scaled, lengths):
    """log((2 t)^L / L!) for every (t, L); -inf where t = 0 and L > 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        log2t = np.log(2 * scaled)[:, None]
        out = lengths[None, :] * log2t - gammaln(lengths + 1)[None, :]
    out[:, 0] = 0.0
    return out


def _series_sum(scaled, log_sums):
    """sum_L (2t)^L / L! * exp(log_sums[L]) per time, combined in log space."""
    lengths = np.arange(len(log_sums))
    logs = _log_series_terms(scaled, lengths) + log_sums[None, :]
    with np.errstate(over="ignore"):
        return np.exp(logsumexp(logs, axis=1))


def pathsum_truncation(t_max, w_max, branching, prefactor, tol, max_length=100000):
    """Smallest L_max with prefactor * sum_{L > L_max} (b 2t w)^L / L! < tol."""
    x = branching * 2 * (abs(t_max) / HBAR) * w_max
    if x == 0:
        return 0
    log_pref = math.log(prefactor) if prefactor > 0 else -math.inf
    for L in range(max_length):
        # once L + 2 > x the terms decrease geometrically with ratio <= x / (L + 2)
        if L + 2 > x:
            log_next = (L + 1) * math.log(x) - math.lgamma(L + 2)
            tail = log_pref + log_next - math.log1p(-x / (L + 2))
            if tail < math.log(tol):
                return L
    raise ResourceError(f"path-sum truncation did not converge below L={max_length}")


def new_bound_pathsum(
    t,
    X,
    Y,
    system,
    tol=1e-12,
    norm_a=None,
    norm_b=None,
    clamp=True,
    node_budget=DEFAULT_NODE_BUDGET,
):
    """2 ||A|| ||B|| sum over paths X -> Y of |2t|^L / L! * w(path).

    A lives on Y (the evolving observable), B on X. Norms default to the S^z
    norms of the first site of each set. Only multi-site terms can enter a
    path, so one-body terms never change the result. The series is cut where
    a rigorous tail bound drops below ``tol``.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    X, Y = tuple(sorted(X)), tuple(sorted(Y))
    norm_a = system.sz_norm(Y[0]) if norm_a is None else norm_a
    norm_b = system.sz_norm(X[0]) if norm_b is None else norm_b
    pref = 2 * norm_a * norm_b
    scaled = np.atleast_1d(_scaled_time(t))
    terms = system.multi_site_terms
    w_max = max((tm.norm for tm in terms), default=0.0)
    L_max = pathsum_truncation(scaled.max() * HBAR, w_max, branching_factor(X, terms), pref, tol)
    try:
        if terms:
            logs = path_log_weight_sums(X, Y, terms, L_max, node_budget)
        else:
            logs = np.array([0.0 if set(X) & set(Y) else -np.inf])
    except ResourceError as exc:
        partial = exc.partial
        vals = pref * _series_sum(scaled, partial)
        raise ResourceError(
            f"node budget exhausted at path length {len(partial) - 1} of {L_max} needed for tol={tol}",
            partial={"values": vals, "tol": tol, "length_reached": len(partial) - 1},
        ) from None
    vals = pref * _series_sum(scaled, logs)
    vals = _clamp(vals, pref, clamp)
    return float(vals[0]) if np.ndim(t) == 0 else vals


# -- nearest-neighbour closed form -------------------------------------------


def limit_speed(J, s, d=1):
    """v = 4 e (2d - 1) J s^2 in meV (sites per unit natural time)."""
    return 4 * math.e * (2 * d - 1) * J * s**2


def new_bound_1d(t, dist, J, s, d=1, clamp=True):
    """s^2 (v |t| / dist)^dist with v = 4e(2d-1) J s^2, capped at 2 s^2."""
    if dist < 1:
        raise DomainError(f"closed form needs dist >= 1 (use the trivial bound), got {dist}")
    v = limit_speed(J, s, d)
    with np.errstate(over="ignore"):
        vals = s**2 * np.power(v * _scaled_time(t) / dist, dist)
    return _scalar_out(t, _clamp(vals, 2 * s**2, clamp))


def chain_parameters(system):
    """(J, s) for the closed form: the largest coupling component and spin in the system."""
    Js = [max(abs(c) for c in t.params.get("J", (0.0,))) for t in system.multi_site_terms]
    if not Js:
        raise DomainError("system has no multi-site (Heisenberg) terms")
    return max(Js), max(system.spins)


def new_bound_1d_system(t, x, y, system, clamp=True):
    J, s = chain_parameters(system)
    return new_bound_1d(t, system.lattice.distance(x, y), J, s, system.lattice.dim, clamp)


# -- tip-related bound -------------------------------------------------------


def tilde_bound(t, norm_p, norm_a, small=1e-6):
    """norm_a * d/dlam [(e^(lam t) - 1) / lam] at lam = 2 ||P||, t in units of hbar."""
    if norm_p < 0:
        raise DomainError(f"tip norm must be nonnegative, got {norm_p}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("tilde bound is defined for t >= 0")
    tt = t_arr / HBAR
    lam = 2.0 * norm_p
    u = lam * tt
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        exact = (u * np.exp(u) - np.expm1(u)) / lam**2
    # series t^2 (1/2 + u/3 + u^2/8 + ...) where the closed form cancels badly
    vals = np.where(u < small, tt**2 * (0.5 + u / 3 + u**2 / 8), exact) * norm_a
    return _scalar_out(t, vals)


def adaptive_simpson(f, a, b, rtol=1e-8, max_depth=50):
    """Integrate f on [a, b] by recursive Simpson with Richardson correction."""

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6 * (fa + 4 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = (a + b) / 2
        lm, rm = (a + m) / 2, (m + b) / 2
        flm, frm = f(lm), f(rm)
        left, right = simpson(fa, flm, fm, a, m), simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth >= max_depth or abs(delta) <= 15 * tol:
            return left + right + delta / 15
        return rec(a, m, fa, flm, fm, left, tol / 2, depth + 1) + rec(m, b, fm, frm, fb, right, tol / 2, depth + 1)

    if b == a:
        return 0.0
    fa, fm, fb = f(a), f((a + b) / 2), f(b)
    whole = simpson(fa, fm, fb, a, b)
    # coarse pass sets the absolute scale for the relative tolerance
    grid = np.linspace(a, b, 17)
    scale = abs(np.trapezoid([f(v) for v in grid], grid)) or 1e-300
    return rec(a, b, fa, fm, fb, whole, rtol * scale, 0)


def tilde_bound_conv(t, norm_p, norm_a, bound, rtol=1e-8):
    """norm_a * int_0^t bound(t') e^(lam (t - t')) dt' in units of hbar, lam = 2 ||P||.

    ``bound`` takes times in ps. This is the line before the integral is
    collapsed into the closed form of ``tilde_bound``.
    """
    lam = 2.0 * norm_p
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise DomainError("tilde bound is defined for t >= 0")
    # I(T_k) = e^{lam (T_k - T_{k-1})} I(T_{k-1}) + int_{T_{k-1}}^{T_k} B(u) e^{lam (T_k - u)} du
    order = np.argsort(ts, kind="stable")
    out = np.empty_like(ts)
    acc, prev = 0.0, 0.0
    for k in order:
        T = ts[k] / HBAR
        seg = adaptive_simpson(lambda u: float(bound(u * HBAR)) * math.exp(lam * (T - u)), prev, T, rtol)
        acc = acc * math.exp(lam * (T - prev)) + seg
        prev = T
        out[k] = norm_a * acc
    return _scalar_out(t, out)


# -- arrival times -----------------------------------------------------------


def crossing_time(times, values, level, func=None, resolution=1e-4):
    """First time a sampled nondecreasing curve reaches ``level``; inf if never.

    With ``func`` the bracket is refined by bisection to ``resolution``,
    otherwise it is linearly interpolated.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    hit = np.flatnonzero(values >= level)
    if hit.size == 0:
        return math.inf
    k = int(hit[0])
    if k == 0:
        return float(times[0])
    lo, hi = float(times[k - 1]), float(times[k])
    if func is None:
        v0, v1 = values[k - 1], values[k]
        return lo + (hi - lo) * (level - v0) / (v1 - v0)
    while hi - lo > resolution:
        mid = (lo + hi) / 2
        if float(func(mid)) >= level:
            hi = mid
        else:
            lo = mid
    return hi


def arrival_time(curve, threshold_fraction=0.05, resolution=1e-4):
    """Time at which ``curve`` first reaches threshold_fraction * curve.cap (inf if never)."""
    if not 0 < threshold_fraction < 1:
        raise DomainError(f"threshold_fraction must lie in (0, 1), got {threshold_fraction}")
    return crossing_time(curve.times, curve.values, threshold_fraction * curve.cap, curve.func, resolution)


def is_monotone(values, atol=0.0):
    return bool(np.all(np.diff(np.asarray(values)) >= -atol))
