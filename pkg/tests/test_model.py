import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrlab.constants import HBAR, K_B, MU_B, beta_from_temperature
from lrlab.errors import DomainError, ResourceError
from lrlab.lattice import Lattice
from lrlab.model import (
    InteractionTerm,
    SpinSystem,
    TipParameters,
    anisotropy_term,
    assemble_hamiltonian,
    heisenberg_chain,
    heisenberg_term,
    tip_chain,
    tip_operator,
    tip_term,
    zeeman_term,
)
from lrlab.spin import LocalOperator, embed, is_hermitian, operator_norm, spin_matrices


def test_constants():
    assert HBAR == 0.6582119569
    assert abs(MU_B - 0.057883818060) < 1e-15
    assert abs(beta_from_temperature(0.5) - 1 / (0.5 * K_B)) < 1e-12
    assert 23.0 < beta_from_temperature(0.5) < 23.4


@pytest.mark.parametrize("s,norm", [(0.5, 0.75), (1, 2.0)])
def test_heisenberg_norm(s, norm):
    t = heisenberg_term(0, 1, 1.0, s)
    assert abs(t.norm - norm) < 1e-12
    assert t.body_count == 2


def test_heisenberg_half_spectrum():
    t = heisenberg_term(0, 1, 1.0, 0.5)
    assert np.allclose(np.linalg.eigvalsh(t.matrix), [-0.75, 0.25, 0.25, 0.25])
    assert not np.iscomplexobj(t.matrix)


def test_heisenberg_zero_and_bad_sites():
    assert heisenberg_term(0, 1, (0, 0, 0), 1).norm == 0
    with pytest.raises(DomainError):
        heisenberg_term(2, 2, 1.0, 0.5)


def test_heisenberg_reversed_sites_same_operator():
    a = heisenberg_term(0, 1, (1.0, 0.5, 2.0), 0.5, 1)
    b = heisenberg_term(1, 0, (1.0, 0.5, 2.0), 1, 0.5)
    assert a.support == b.support
    assert np.allclose(a.matrix, b.matrix)


def test_anisotropy_examples():
    assert np.allclose(anisotropy_term(0, 2.0, 1).matrix, np.diag([2.0, 0.0, 2.0]))
    assert anisotropy_term(0, 2.0, 1).norm == 2.0
    assert np.allclose(anisotropy_term(0, 2.0, 0.5).matrix, 0.5 * np.eye(2))
    assert not np.any(anisotropy_term(0, 0.0, 1).matrix)


def test_zeeman_examples():
    t = zeeman_term(0, 2.0, (0, 0, 1), 0.5)
    assert np.allclose(np.diag(t.matrix), [MU_B, -MU_B], atol=1e-15)
    assert abs(t.matrix[0, 0] - 0.05788) < 1e-5
    assert not np.any(zeeman_term(0, 2.0, (0, 0, 0), 1).matrix)


@settings(max_examples=25, deadline=None)
@given(
    B=st.tuples(*[st.floats(-5, 5, allow_nan=False)] * 3),
    g=st.floats(0.5, 3),
    s=st.sampled_from([0.5, 1, 1.5]),
)
def test_zeeman_norm(B, g, s):
    t = zeeman_term(0, g, B, s)
    assert abs(t.norm - g * MU_B * np.linalg.norm(B) * s) < 1e-12


def test_tip_examples():
    p = TipParameters(g=2.0, m_tip=(0, 0, 1))
    assert np.allclose(tip_term(p, 0.5).matrix, np.diag([1.0, -1.0]))
    for norm in (1, 2, 4):
        assert abs(tip_term(TipParameters.from_norm(norm, 1), 1).norm - norm) < 1e-12
    retracted = TipParameters(g=3.0, kappa=math.inf, height=1.0)
    assert not np.any(tip_term(retracted, 1).matrix)


def test_tip_validation():
    with pytest.raises(DomainError):
        TipParameters(m_tip=(1, 1, 0))
    with pytest.raises(DomainError):
        TipParameters(polarization=2)
    with pytest.raises(DomainError):
        tip_term(TipParameters(polarization=-0.5), 1)
    with pytest.raises(DomainError):
        TipParameters.from_norm(-1, 1)


def test_tip_raw_parameters_collapse():
    p = TipParameters(g=2.0, I0=1.5, polarization=0.5, kappa=0.3, height=2.0)
    assert abs(p.prefactor - 2.0 * 1.5 * 0.5 * math.exp(-1.2)) < 1e-15


def test_non_hermitian_term_rejected():
    with pytest.raises(DomainError):
        InteractionTerm((0,), np.array([[0, 1], [0, 0]]))


def test_two_site_spectrum():
    H = assemble_hamiltonian(heisenberg_chain(2, 0.5, J=1.0))
    assert np.allclose(np.linalg.eigvalsh(H), [-0.75, 0.25, 0.25, 0.25])


def test_empty_subset_is_zero():
    sysm = heisenberg_chain(3, 0.5, J=1.0, K=1.0)
    assert not np.any(assemble_hamiltonian(sysm, subset=[]))


def test_tip_chain_shape_and_cap():
    sysm = tip_chain()
    assert sysm.hilbert_dim == 6561
    assert len(sysm.multi_site_terms) == 7
    with pytest.raises(ResourceError):
        assemble_hamiltonian(sysm, cap=1000)


def test_spin_system_validation():
    with pytest.raises(DomainError):
        SpinSystem(Lattice(3), (0.5, 0.5))
    with pytest.raises(DomainError):
        SpinSystem(Lattice(2), 0.5, (heisenberg_term(1, 2, 1.0, 0.5),))
    with pytest.raises(DomainError):
        SpinSystem(Lattice(2), 0.5, (anisotropy_term(0, 1.0, 1),))


@st.composite
def random_systems(draw):
    n = draw(st.integers(2, 4))
    s = draw(st.sampled_from([0.5, 1]))
    J = draw(st.tuples(*[st.floats(-2, 2, allow_nan=False)] * 3))
    K = draw(st.floats(-2, 2, allow_nan=False))
    B = draw(st.tuples(*[st.floats(-3, 3, allow_nan=False)] * 3))
    return heisenberg_chain(n, s, J, K, B)


@settings(max_examples=30, deadline=None)
@given(random_systems())
def test_hamiltonian_hermitian(system):
    assert is_hermitian(assemble_hamiltonian(system))


@settings(max_examples=20, deadline=None)
@given(
    n=st.integers(2, 4),
    s=st.sampled_from([0.5, 1]),
    J=st.floats(-2, 2, allow_nan=False),
    K=st.floats(-2, 2, allow_nan=False),
    Bz=st.floats(-3, 3, allow_nan=False),
)
def test_total_sz_conserved(n, s, J, K, Bz):
    system = heisenberg_chain(n, s, J, K, (0, 0, Bz))
    H = assemble_hamiltonian(system)
    Mz = sum(embed(system.sz(i), system) for i in range(n))
    assert np.max(np.abs(H @ Mz - Mz @ H)) < 1e-10


def test_assembled_matches_embedded_sum():
    system = heisenberg_chain(3, 1, (1.0, 0.7, 0.3), K=2.0, B=(0.5, -1.0, 2.0))
    H = assemble_hamiltonian(system)
    ref = sum(embed(t.operator, system) for t in system.terms)
    assert np.allclose(H, ref, atol=1e-14)


def test_disjoint_subsystems_additive():
    # sites {0,1} and {2,3} with no bond between them
    lat = Lattice(4)
    terms = (heisenberg_term(0, 1, 1.0, 0.5), heisenberg_term(2, 3, 2.0, 0.5), anisotropy_term(3, 1.0, 0.5))
    system = SpinSystem(lat, 0.5, terms)
    H = assemble_hamiltonian(system)
    H1 = assemble_hamiltonian(system, subset=[0, 1])
    H2 = assemble_hamiltonian(system, subset=[2, 3])
    assert np.allclose(H, H1 + H2)
    # thermal correlations on {0,1} do not see the terms on {2,3}
    from scipy.linalg import expm

    A = embed(LocalOperator((0, 1), np.kron(spin_matrices(0.5).sz, spin_matrices(0.5).sz)), system)
    for Hx in (H, H1):
        rho = expm(-1.3 * Hx)
        val = np.trace(rho @ A).real / np.trace(rho).real
        # singlet gives -1/4, the three triplets give +1/4, +1/4, -1/4
        ws, wt = math.exp(1.3 * 0.75), math.exp(-1.3 * 0.25)
        assert abs(val - (-0.25 * ws + 0.25 * wt) / (ws + 3 * wt)) < 1e-12


def test_tip_operator_norm():
    system = heisenberg_chain(3, 1)
    P = tip_operator(system, TipParameters.from_norm(2.0, 1, site=1, m_tip=(1, 0, 0)))
    assert abs(operator_norm(P) - 2.0) < 1e-12
    ref = embed(LocalOperator((1,), 2.0 * spin_matrices(1).sx), system)
    assert np.allclose(P, ref)
