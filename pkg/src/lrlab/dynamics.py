"""Exact thermal dynamics by dense diagonalization.

The free Gibbs state is prepared with H; at t = 0 the tip term P is switched
on and observables evolve under H + P. Everything here is brute force and
serves as the reference the bounds are checked against.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .constants import HBAR, beta_from_temperature
from .errors import DomainError, InsufficientDataError, NumericError
from .spin import check_dim, embed, is_hermitian

DENSE_MAX_DIM = 8192
COMMUTATOR_MAX_DIM = 4096
WEIGHT_CUTOFF = 1e-14


@dataclass(frozen=True, eq=False)
class ThermalState:
    """Gibbs state exp(-beta H)/Z stored through the eigendecomposition of H."""

    beta: float
    energies: np.ndarray
    vectors: np.ndarray
    weights: np.ndarray

    @property
    def dim(self):
        return self.energies.shape[0]

    def kept(self, cutoff=WEIGHT_CUTOFF):
        """Indices of eigenstates whose weight exceeds ``cutoff`` times the largest."""
        return np.flatnonzero(self.weights > cutoff * self.weights.max())

    def density_matrix(self):
        k = self.kept()
        v = self.vectors[:, k]
        return (v * self.weights[k]) @ v.conj().T


@dataclass(frozen=True, eq=False)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    observable: str = ""
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape:
            raise DomainError("times and values must be 1-D arrays of equal length")
        if np.any(np.diff(times) <= 0):
            raise DomainError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)


def _check_hermitian(H, name="H"):
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError(f"{name} must be a square matrix, got shape {H.shape}")
    if not is_hermitian(H):
        raise DomainError(f"{name} is not Hermitian")
    return H


def _eigh(H):
    try:
        return np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc


def block_eigh(H, use_blocks=True):
    """eigh of H assembled from its connected diagonal blocks, energies ascending."""
    blocks = _blocks(H) if use_blocks else []
    if len(blocks) <= 1:
        return _eigh(H)
    parts = [_eigh(H[np.ix_(idx, idx)]) for idx in blocks]
    energies = np.concatenate([e for e, _ in parts])
    order = np.argsort(energies, kind="stable")
    pos = np.empty_like(order)
    pos[order] = np.arange(len(order))
    V = np.zeros(H.shape, dtype=np.result_type(*[v for _, v in parts]))
    offset = 0
    for idx, (e, v) in zip(blocks, parts):
        V[np.ix_(idx, pos[offset:offset + len(idx)])] = v
        offset += len(idx)
    return energies[order], V


def gibbs_state(H, beta=None, temperature=None):
    """Thermal state of H at inverse temperature ``beta`` (1/meV) or ``temperature`` (K)."""
    if (beta is None) == (temperature is None):
        raise DomainError("give exactly one of beta and temperature")
    if beta is None:
        beta = beta_from_temperature(temperature)
    if beta < 0:
        raise DomainError(f"beta must be nonnegative, got {beta}")
    H = _check_hermitian(H)
    check_dim(H.shape[0])
    energies, vectors = block_eigh(H)
    if math.isinf(beta):
        weights = (energies - energies[0] <= 1e-12 * max(1.0, abs(energies[0]))).astype(float)
    else:
        # shift by the ground energy so the largest exponent is zero
        weights = np.exp(-beta * (energies - energies[0]))
    weights /= weights.sum()
    return ThermalState(float(beta), energies, vectors, weights)


def expectation(state, A):
    k = state.kept()
    v = state.vectors[:, k]
    diag = np.einsum("ij,ij->j", v.conj(), np.asarray(A) @ v)
    return float(np.real(diag @ state.weights[k]))


def evolve_operator(H, A, t):
    """Heisenberg-picture e^{iHt/hbar} A e^{-iHt/hbar} for a single time t in ps."""
    E, V = _eigh(_check_hermitian(H))
    phase = np.exp(1j * E * t / HBAR)
    At = V.conj().T @ A @ V
    return V @ (phase[:, None] * At * phase.conj()[None, :]) @ V.conj().T


class _DenseEvolver:
    """Expectation values Tr(rho e^{iKt} A e^{-iKt}) with K = H + P, block by block.

    rho and K are block diagonal over the connected components of the joint
    nonzero pattern of H and P (e.g. fixed total S^z when the tip is along z),
    so each block is diagonalized on its own. Only diagonal blocks of A
    contribute to the trace. Blocks without thermal population are skipped.
    """

    def __init__(self, H, P, state, use_blocks=True):
        K = H if P is None else H + P
        n = K.shape[0]
        blocks = _blocks(H, K) if use_blocks else [np.arange(n)]
        kept = state.kept()
        self.w = state.weights[kept]
        self.parts = []
        for idx in blocks:
            C0 = state.vectors[np.ix_(idx, kept)]
            if not np.any(C0):
                continue
            F, V = _eigh(K[np.ix_(idx, idx)])
            self.parts.append((idx, F, V, V.conj().T @ C0))
        self.n_blocks = len(blocks)

    def _weighted(self, idx, V, C, A):
        Ab = A[np.ix_(idx, idx)]
        if np.count_nonzero(Ab - np.diag(np.diagonal(Ab))) == 0:
            M = V.conj().T @ (np.diagonal(Ab)[:, None] * V)
        else:
            M = V.conj().T @ Ab @ V
        M = M.astype(np.result_type(M, C), copy=False)
        # M = rho^T * A~ elementwise with rho = C diag(w) C^H, built in row slabs
        for r in range(0, M.shape[0], 1024):
            M[r:r + 1024] *= (C[r:r + 1024].conj() * self.w) @ C.T
        if np.iscomplexobj(M) and not np.any(M.imag):
            M = M.real
        return M

    def expectation_series(self, A, times, batch=128):
        A = np.asarray(A)
        times = np.asarray(times, dtype=float)
        out = np.zeros(times.shape)
        for idx, F, V, C in self.parts:
            M = self._weighted(idx, V, C, A)
            for start in range(0, len(times), batch):
                arg = np.outer(F, times[start:start + batch] / HBAR)
                if np.iscomplexobj(M):
                    U = np.exp(-1j * arg)
                    out[start:start + batch] += np.real(np.sum(U.conj() * (M @ U), axis=0))
                else:
                    # u = c - i s; Re(u^H M u) = c.Mc + s.Ms for real M
                    c, s = np.cos(arg), np.sin(arg)
                    out[start:start + batch] += np.sum(c * (M @ c), axis=0) + np.sum(s * (M @ s), axis=0)
        return out


def _row_sum_norm(K):
    # induced infinity norm, an upper bound on the spectral norm
    return float(np.abs(K).sum(axis=1).max())


def _apply(M, X):
    """M @ X for complex X; a real M acts on the interleaved (re, im) view, avoiding a complex copy of M."""
    X = np.ascontiguousarray(X)
    if np.iscomplexobj(M):
        return M @ X
    return np.asarray(M @ X.view(np.float64)).view(complex)


def lanczos_expm(K, psi, dt, order=30, tol=1e-13):
    """exp(-i K dt) psi by a Lanczos projection of at most ``order`` vectors.

    ``dt`` is in units of hbar/energy (i.e. already divided by hbar). ``psi``
    may be a single vector or an (n, k) block; each column gets its own
    Krylov space, all advanced together. The spaces grow until the a
    posteriori error estimate of every column drops below ``tol``.
    """
    single = psi.ndim == 1
    Psi = psi[:, None] if single else psi
    n, k = Psi.shape
    norms = np.linalg.norm(Psi, axis=0)
    Q = np.zeros((order, n, k), dtype=complex)
    Q[0] = Psi / np.where(norms > 0, norms, 1.0)
    alpha = np.zeros((order, k))
    beta = np.zeros((order, k))
    for j in range(order):
        w = _apply(K, Q[j])
        alpha[j] = np.real(np.einsum("ik,ik->k", Q[j].conj(), w))
        w -= alpha[j] * Q[j]
        if j > 0:
            w -= beta[j - 1] * Q[j - 1]
        # full reorthogonalisation keeps the small bases orthonormal
        w -= np.einsum("jik,jk->ik", Q[: j + 1], np.einsum("jik,ik->jk", Q[: j + 1].conj(), w))
        beta[j] = np.linalg.norm(w, axis=0)
        T = np.zeros((k, j + 1, j + 1))
        d = np.arange(j + 1)
        T[:, d, d] = alpha[: j + 1].T
        T[:, d[1:], d[:-1]] = T[:, d[:-1], d[1:]] = beta[:j].T
        theta, S = np.linalg.eigh(T)
        y = np.einsum("kab,kb->ka", S, np.exp(-1j * theta * dt) * S[:, 0, :])
        done = (beta[j] * np.abs(y[:, -1]) < tol) | (beta[j] < 1e-14)
        if np.all(done) or j + 1 == order:
            break
        # exhausted columns get a zero vector, which decouples in T
        Q[j + 1] = np.where(beta[j] < 1e-14, 0.0, w / np.where(beta[j] > 0, beta[j], 1.0))
    out = np.einsum("jik,kj->ik", Q[: j + 1], y) * norms
    return out[:, 0] if single else out


def _krylov_series(K, state, A, times, order, max_step, chunk=32):
    times = np.asarray(times, dtype=float)
    if max_step is None:
        max_step = 0.01 * HBAR / max(_row_sum_norm(K), 1e-300)
    out = np.zeros(times.shape)
    kept = state.kept()
    # spin Hamiltonians are very sparse; the propagation only needs matvecs
    K, A = csr_matrix(K), csr_matrix(A)
    for c in range(0, len(kept), chunk):
        cols = kept[c:c + chunk]
        Psi = state.vectors[:, cols].astype(complex)
        w = state.weights[cols]
        t_now = 0.0
        for i, t in enumerate(times):
            while t - t_now > 1e-15:
                dt = min(max_step, t - t_now)
                Psi = lanczos_expm(K, Psi, dt / HBAR, order)
                t_now += dt
            out[i] += float(np.real(np.einsum("ik,ik->k", Psi.conj(), _apply(A, Psi))) @ w)
    return out


def evolve_observable(
    H,
    P,
    state,
    A,
    times,
    method="auto",
    observable="",
    provenance=None,
    krylov_order=30,
    max_step=None,
):
    """<A>(t) = Tr(rho e^{i(H+P)t/hbar} A e^{-i(H+P)t/hbar}) for the Gibbs state of H.

    ``state`` must come from the same H. ``P=None`` is free evolution.
    ``method`` is "dense" (exact diagonalization per conserved block), "krylov" (Lanczos
    propagation of the populated eigenvectors of rho) or "auto" (dense up to
    dimension 8192).
    """
    H = _check_hermitian(H)
    A = _check_hermitian(A, "A")
    if P is not None:
        P = _check_hermitian(P, "P")
        if P.shape != H.shape:
            raise DomainError(f"P has shape {P.shape}, H has {H.shape}")
    if A.shape != H.shape or state.dim != H.shape[0]:
        raise DomainError("H, A and the thermal state must share one Hilbert space")
    times = np.asarray(times, dtype=float)
    if method == "auto":
        method = "dense" if H.shape[0] <= DENSE_MAX_DIM else "krylov"
    if method == "dense":
        values = _DenseEvolver(H, P, state).expectation_series(A, times)
    elif method == "krylov":
        K = H if P is None else H + P
        values = _krylov_series(K, state, A, times, krylov_order, max_step)
    else:
        raise DomainError(f"unknown method {method!r}")
    prov = {"beta": state.beta, "method": method, "perturbed": P is not None}
    prov.update(provenance or {})
    return TimeSeries(times, values, observable, prov)


def _blocks(*mats):
    """Index sets of the common block-diagonal structure of the given matrices."""
    pattern = sum((np.abs(m) > 0).astype(np.int8) for m in mats)
    n, labels = connected_components(csr_matrix(pattern), directed=False)
    return [np.flatnonzero(labels == k) for k in range(n)]


def commutator_norm_series(H, A, B, times, dims, cap=COMMUTATOR_MAX_DIM, use_blocks=True):
    """||[e^{iHt/hbar} A e^{-iHt/hbar}, B]|| for LocalOperators A and B.

    ``dims`` is a SpinSystem or a sequence of local dimensions. When H, A and
    B share a block-diagonal structure (e.g. a conserved magnetization) the
    norm is taken block by block, which is exact and much cheaper.
    """
    H = _check_hermitian(H)
    check_dim(H.shape[0], cap)
    Af, Bf = embed(A, dims), embed(B, dims)
    if Af.shape != H.shape:
        raise DomainError("operators and H live in different Hilbert spaces")
    blocks = _blocks(H, Af, Bf) if use_blocks else [np.arange(H.shape[0])]
    times = np.asarray(times, dtype=float)
    values = np.zeros(times.shape)
    for idx in blocks:
        if len(idx) == 1:
            continue
        E, V = _eigh(H[np.ix_(idx, idx)])
        # the norm is basis independent, so stay in the eigenbasis of H
        Ae = V.conj().T @ Af[np.ix_(idx, idx)] @ V
        Be = V.conj().T @ Bf[np.ix_(idx, idx)] @ V
        for k, t in enumerate(times):
            ph = np.exp(1j * E * t / HBAR)
            XB = (ph[:, None] * Ae * ph.conj()[None, :]) @ Be
            # [X, B] = XB - (XB)^H is anti-Hermitian; i[X, B] is Hermitian with the same norm
            iC = 1j * (XB - XB.conj().T)
            values[k] = max(values[k], float(np.max(np.abs(np.linalg.eigvalsh(iC)))))
    label = f"||[A(t),B]|| A on {A.support}, B on {B.support}"
    return TimeSeries(times, values, label, {"blocks": len(blocks)})


def signal_arrival(series, epsilon):
    """First time |value(t) - value(0)| reaches epsilon, linearly interpolated; inf if never."""
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    dev = np.abs(series.values - series.values[0])
    hit = np.flatnonzero(dev >= epsilon)
    if hit.size == 0:
        return math.inf
    k = int(hit[0])
    if k == 0:
        return float(series.times[0])
    t0, t1 = series.times[k - 1], series.times[k]
    d0, d1 = dev[k - 1], dev[k]
    return float(t0 + (t1 - t0) * (epsilon - d0) / (d1 - d0))


@dataclass(frozen=True)
class VelocityFit:
    speed: float  # sites/ps
    intercept: float  # sites
    r2: float
    n_points: int

    @property
    def speed_mev_site(self):
        """Speed times hbar, comparable to the bound's v in meV * site."""
        return self.speed * HBAR


def fit_velocity(distances, arrivals):
    """Least-squares slope of distance against arrival time, ignoring infinite arrivals."""
    d = np.asarray(distances, dtype=float)
    t = np.asarray(arrivals, dtype=float)
    ok = np.isfinite(t)
    if ok.sum() < 3:
        raise InsufficientDataError(f"need at least 3 finite arrivals, got {int(ok.sum())}")
    d, t = d[ok], t[ok]
    slope, intercept = np.polyfit(t, d, 1)
    resid = d - (slope * t + intercept)
    ss_tot = np.sum((d - d.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return VelocityFit(float(slope), float(intercept), float(r2), int(ok.sum()))


def estimate_velocity(H, P, state, system, sites, epsilon, times, source=0):
    """Arrival of the tip signal at each of ``sites`` and the fitted propagation speed.

    Returns (VelocityFit, arrivals). Distances are measured from ``source``.
    """
    if P is None:
        raise InsufficientDataError("free evolution carries no signal")
    evolver = _DenseEvolver(H, P, state)
    arrivals = []
    for j in sites:
        vals = evolver.expectation_series(embed(system.sz(j), system), times)
        arrivals.append(signal_arrival(TimeSeries(times, vals), epsilon))
    distances = [system.lattice.distance(source, j) for j in sites]
    return fit_velocity(distances, arrivals), arrivals
