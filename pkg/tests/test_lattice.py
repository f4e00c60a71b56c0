from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrlab.errors import DomainError, ResourceError
from lrlab.lattice import (
    Lattice,
    Path,
    boundary,
    branching_factor,
    enumerate_paths,
    is_valid_path,
    iter_paths,
    path_count_bound,
    path_weight_sums,
)
from lrlab.model import heisenberg_chain, nearest_neighbor_system


def test_lattice_geometry():
    lat = Lattice((3, 4))
    assert lat.n_sites == 12 and lat.dim == 2
    assert lat.coords(5) == (1, 1)
    assert lat.site((2, 3)) == 11
    assert lat.distance(0, 11) == 5
    assert len(lat.bonds()) == 3 * 3 + 2 * 4
    assert Lattice.chain(5).bonds() == [(0, 1), (1, 2), (2, 3), (3, 4)]
    with pytest.raises(DomainError):
        Lattice((2, 2, 2))
    with pytest.raises(DomainError):
        lat.check_site(12)


def test_path_count_bound_examples():
    assert path_count_bound(1, 3) == 8
    assert path_count_bound(2, 2) == 36
    assert path_count_bound(1, 0) == 1
    assert isinstance(path_count_bound(2, 30), int)


def test_boundary_examples():
    chain = heisenberg_chain(10, 0.5, K=1.0)
    # X = {5} in 1-based labels is site 4 here
    assert sorted(boundary([4], chain.terms)) == [(3, 4), (4, 5)]
    assert boundary(range(10), chain.terms) == []
    assert boundary([0], chain.terms) == [(0, 1)]
    with pytest.raises(DomainError):
        boundary([], chain.terms)


def test_one_body_terms_never_in_boundary():
    chain = heisenberg_chain(5, 1, K=2.0, B=(0, 0, 1))
    for x in range(5):
        assert all(len(z) == 2 for z in boundary([x], chain.terms))


def test_three_site_hand_example():
    chain = heisenberg_chain(3, 0.5, J=1.0)
    paths = enumerate_paths([0], [2], chain.terms, max_length=2)
    assert len(paths) == 1
    assert paths[0].sets == ((0, 1), (1, 2))
    assert paths[0].weight == 0.75**2


def test_adjacent_length_one_path():
    chain = heisenberg_chain(2, 0.5)
    paths = enumerate_paths([0], [1], chain.terms, max_length=1)
    assert [p.sets for p in paths] == [((0, 1),)]


@pytest.mark.parametrize("extent", [(12,), (3, 3)])
def test_counts_below_bound(extent):
    system = nearest_neighbor_system(Lattice(extent), 0.5, 1.0)
    n = system.n_sites
    d = system.lattice.dim
    # Y = every site, so this counts every chain leaving X
    counts = Counter(p.length for p in iter_paths([n // 2], range(n), system.terms, 8))
    for L in range(1, 9):
        assert counts[L] <= path_count_bound(d, L)
    assert branching_factor([n // 2], system.terms) <= 2 * (2 * d - 1)


@pytest.mark.parametrize("n", range(2, 13))
def test_minimal_path_length(n):
    chain = heisenberg_chain(n, 0.5)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            sums = path_weight_sums([i], [j], chain.terms, abs(i - j))
            assert np.flatnonzero(sums)[0] == abs(i - j)


@settings(max_examples=25, deadline=None)
@given(
    extent=st.sampled_from([(5,), (6,), (2, 3), (3, 3)]),
    data=st.data(),
    J=st.floats(0.1, 2.0),
)
def test_paths_replay_and_dp_matches(extent, data, J):
    system = nearest_neighbor_system(Lattice(extent), 0.5, J, K=0.5)
    n = system.n_sites
    x = data.draw(st.integers(0, n - 1))
    y = data.draw(st.integers(0, n - 1))
    L = 5
    paths = enumerate_paths([x], [y], system.terms, L)
    assert all(is_valid_path(p, [x], [y], system.terms) for p in paths)
    by_len = np.zeros(L + 1)
    for p in paths:
        by_len[p.length] += p.weight
    sums = path_weight_sums([x], [y], system.terms, L)
    assert np.allclose(sums[1:], by_len[1:], rtol=1e-12, atol=0)
    assert sums[0] == (1.0 if x == y else 0.0)


def test_invalid_path_detected():
    chain = heisenberg_chain(4, 0.5)
    assert not is_valid_path(Path(((0, 1), (2, 3)), 0.75**2), [0], [3], chain.terms)
    assert not is_valid_path(Path(((0, 1), (1, 2)), 0.75**2), [0], [3], chain.terms)
    assert not is_valid_path(Path(((0, 1),), 1.0), [0], [1], chain.terms)
    assert is_valid_path(Path(((0, 1),), 0.75), [0], [1], chain.terms)


def test_budget_exhaustion_keeps_partial():
    system = nearest_neighbor_system(Lattice((3, 3)), 0.5, 1.0)
    with pytest.raises(ResourceError) as info:
        enumerate_paths([4], range(9), system.terms, 8, node_budget=100)
    assert info.value.has_partial
    assert 0 < len(info.value.partial) <= 100
    with pytest.raises(ResourceError):
        path_weight_sums([4], [0], system.terms, 50, node_budget=100)


def test_paths_revisit_sets():
    chain = heisenberg_chain(3, 0.5)
    sets = {p.sets for p in enumerate_paths([0], [1], chain.terms, 3)}
    assert ((0, 1), (1, 2), (0, 1)) in sets
