"""Interaction terms, spin systems and subsystem Hamiltonians.

All energies are in meV. Every term carries its support, its local matrix and
its cached operator norm so bound evaluation never has to touch the full
Hilbert space.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import MU_B
from .errors import DomainError
from .lattice import Lattice
from .spin import (
    LocalOperator,
    as_spin,
    check_dim,
    embed,
    is_hermitian,
    local_dim,
    operator_norm,
    real_if_close,
    spin_matrices,
)

KINDS = ("heisenberg", "anisotropy", "zeeman", "tip", "custom")


@dataclass(frozen=True, eq=False)
class InteractionTerm:
    support: tuple
    matrix: np.ndarray
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    norm: float = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown term kind {self.kind!r}")
        op = LocalOperator(self.support, real_if_close(self.matrix))
        if not is_hermitian(op.matrix):
            raise DomainError(f"{self.kind} term on {op.support} is not Hermitian")
        object.__setattr__(self, "support", op.support)
        object.__setattr__(self, "matrix", op.matrix)
        if self.norm is None:
            object.__setattr__(self, "norm", operator_norm(op.matrix))

    @property
    def body_count(self):
        return len(self.support)

    @property
    def operator(self):
        return LocalOperator(self.support, self.matrix)


def _vec3(v, name):
    v = np.asarray(v, dtype=float)
    if v.shape == ():
        v = np.full(3, float(v))
    if v.shape != (3,):
        raise DomainError(f"{name} must be a scalar or a 3-vector, got shape {v.shape}")
    return v


def heisenberg_term(i, j, J, s_i, s_j=None):
    """sum_a J^a S^a_i S^a_j on the bond {i, j}. ``J`` is a scalar or 3-vector in meV."""
    if i == j:
        raise DomainError(f"Heisenberg term needs two distinct sites, got {i} twice")
    s_j = s_i if s_j is None else s_j
    J = _vec3(J, "J")
    a, b = spin_matrices(s_i), spin_matrices(s_j)
    if i > j:
        i, j, a, b = j, i, b, a
    mat = sum(Ja * np.kron(sa, sb) for Ja, sa, sb in zip(J, (a.sx, a.sy, a.sz), (b.sx, b.sy, b.sz)))
    return InteractionTerm((i, j), mat, "heisenberg", {"J": tuple(J)})


def anisotropy_term(i, K, s):
    """K (S^z_i)^2."""
    sz = spin_matrices(s).sz
    return InteractionTerm((i,), K * (sz @ sz), "anisotropy", {"K": float(K)})


def zeeman_term(i, g_factor, B, s):
    """g mu_B B.S_i with B in tesla."""
    B = _vec3(B, "B")
    mat = g_factor * MU_B * spin_matrices(s).component(B)
    return InteractionTerm((i,), mat, "zeeman", {"g_factor": float(g_factor), "B": tuple(B)})


@dataclass(frozen=True)
class TipParameters:
    """Modified Tersoff-Hamann tip coupling, acting only on the site under the tip.

    Only the product g*I0*P*exp(-2*kappa*h) enters the physics.
    """

    g: float = 1.0
    I0: float = 1.0
    polarization: float = 1.0
    kappa: float = 0.0
    height: float = 0.0
    site: int = 0
    m_tip: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        m = np.asarray(self.m_tip, dtype=float)
        if m.shape != (3,):
            raise DomainError("m_tip must be a 3-vector")
        if abs(np.linalg.norm(m) - 1.0) > 1e-12:
            raise DomainError(f"m_tip must be a unit vector, |m_tip| = {np.linalg.norm(m)}")
        if not -1.0 <= self.polarization <= 1.0:
            raise DomainError(f"polarization must lie in [-1, 1], got {self.polarization}")
        object.__setattr__(self, "m_tip", tuple(float(c) for c in m))

    @classmethod
    def from_norm(cls, norm_p, s, site=0, m_tip=(0.0, 0.0, 1.0)):
        """Dial the tip so that ||P|| = norm_p for a spin-s site."""
        if norm_p < 0:
            raise DomainError(f"tip norm must be nonnegative, got {norm_p}")
        return cls(g=norm_p / as_spin(s), site=site, m_tip=m_tip)

    @property
    def prefactor(self):
        if np.isinf(self.kappa):
            decay = 0.0
        else:
            decay = np.exp(-2.0 * self.kappa * np.sqrt(self.height**2))
        return self.g * self.I0 * self.polarization * decay


def tip_term(params, s):
    """p m_tip.S at the tip site; its norm is p*s."""
    p = params.prefactor
    if p < 0:
        raise DomainError(f"tip prefactor must be nonnegative (sign belongs in m_tip), got {p}")
    mat = p * spin_matrices(s).component(params.m_tip)
    return InteractionTerm((params.site,), mat, "tip", {"prefactor": float(p), "m_tip": params.m_tip})


@dataclass(frozen=True, eq=False)
class SpinSystem:
    lattice: Lattice
    spins: tuple
    terms: tuple = ()

    def __post_init__(self):
        spins = self.spins
        if np.isscalar(spins) or isinstance(spins, str):
            spins = (spins,) * self.lattice.n_sites
        spins = tuple(as_spin(s) for s in spins)
        if len(spins) != self.lattice.n_sites:
            raise DomainError(f"{len(spins)} spins given for {self.lattice.n_sites} sites")
        object.__setattr__(self, "spins", spins)
        terms = tuple(self.terms)
        dims = self.local_dims
        for t in terms:
            for i in t.support:
                self.lattice.check_site(i)
            t.operator.check_dims(dims)
        object.__setattr__(self, "terms", terms)

    @property
    def n_sites(self):
        return self.lattice.n_sites

    @property
    def local_dims(self):
        return tuple(local_dim(s) for s in self.spins)

    @property
    def hilbert_dim(self):
        return int(np.prod(self.local_dims, dtype=object))

    @property
    def multi_site_terms(self):
        return tuple(t for t in self.terms if t.body_count > 1)

    def with_terms(self, extra):
        return SpinSystem(self.lattice, self.spins, self.terms + tuple(extra))

    def sz(self, site):
        """S^z on one site as a LocalOperator."""
        return LocalOperator((site,), spin_matrices(self.spins[site]).sz)

    def sz_norm(self, site):
        return self.spins[site]


def nearest_neighbor_system(lattice, s, J, K=0.0, B=None, g_factor=2.0):
    """Heisenberg model on all nearest-neighbour bonds plus optional one-body terms."""
    if not isinstance(lattice, Lattice):
        lattice = Lattice(lattice)
    spins = (as_spin(s),) * lattice.n_sites if np.isscalar(s) or isinstance(s, str) else tuple(s)
    terms = [heisenberg_term(i, j, J, spins[i], spins[j]) for i, j in lattice.bonds()]
    if K:
        terms += [anisotropy_term(i, K, spins[i]) for i in lattice.sites]
    if B is not None and np.any(_vec3(B, "B")):
        terms += [zeeman_term(i, g_factor, B, spins[i]) for i in lattice.sites]
    return SpinSystem(lattice, spins, tuple(terms))


def heisenberg_chain(n, s, J=1.0, K=0.0, B=None, g_factor=2.0):
    return nearest_neighbor_system(Lattice.chain(n), s, J, K, B, g_factor)


def tip_chain():
    """The 8-site spin-1 chain with J = 1 meV and K = 2 meV used for the tip experiment."""
    return heisenberg_chain(8, 1, J=1.0, K=2.0)


def assemble_hamiltonian(system, subset=None, extra=(), cap=None):
    """Sum of all terms whose support lies inside ``subset`` (default: every site).

    ``extra`` terms (e.g. the tip) are added when their support also lies in
    the subset. The result is real whenever every term is.
    """
    sites = frozenset(system.lattice.sites if subset is None else subset)
    for i in sites:
        system.lattice.check_site(i)
    dim = system.hilbert_dim
    check_dim(dim, cap)
    chosen = [t for t in tuple(system.terms) + tuple(extra) if frozenset(t.support) <= sites]
    dtype = complex if any(np.iscomplexobj(t.matrix) for t in chosen) else float
    H = np.zeros((dim, dim), dtype=dtype)
    for t in chosen:
        if not np.any(t.matrix):
            continue
        if t.body_count == 1:
            # one-body terms that are diagonal are the common case; skip the dense kron
            diag = np.diag(t.matrix)
            if np.array_equal(np.diag(diag), t.matrix):
                dims = system.local_dims
                i = t.support[0]
                left, right = int(np.prod(dims[:i])), int(np.prod(dims[i + 1:]))
                H[np.diag_indices(dim)] += np.repeat(np.tile(diag, left), right)
                continue
        H += embed(t.operator, system, cap)
    return H



def tip_operator(system, params, cap=None):
    """Full-space matrix of the tip perturbation P for ``system``."""
    term = tip_term(params, system.spins[params.site])
    return real_if_close(embed(term.operator, system, cap))
