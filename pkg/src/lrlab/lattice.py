"""Lattice geometry, boundaries of site sets and weighted path enumeration.

Boundaries and paths live on the interaction hypergraph: the nodes are
interaction supports, not lattice edges. A support Z is in the boundary of X
when it touches X without being contained in it, so single-site terms can
never appear in a chain leaving X.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceError

DEFAULT_NODE_BUDGET = 10**7


@dataclass(frozen=True)
class Lattice:
    """Hypercubic lattice with open boundaries, sites numbered row-major from 0."""

    extent: tuple

    def __post_init__(self):
        extent = (self.extent,) if np.isscalar(self.extent) else tuple(self.extent)
        extent = tuple(int(e) for e in extent)
        if len(extent) not in (1, 2):
            raise DomainError(f"only 1-D and 2-D lattices are supported, got d={len(extent)}")
        if any(e < 1 for e in extent):
            raise DomainError(f"lattice extents must be positive, got {extent}")
        object.__setattr__(self, "extent", extent)

    @classmethod
    def chain(cls, n):
        return cls((n,))

    @property
    def dim(self):
        return len(self.extent)

    @property
    def n_sites(self):
        return int(np.prod(self.extent))

    @property
    def sites(self):
        return range(self.n_sites)

    def coords(self, site):
        self.check_site(site)
        if self.dim == 1:
            return (site,)
        return divmod(site, self.extent[1])

    def site(self, coords):
        if self.dim == 1:
            return int(coords[0])
        return int(coords[0]) * self.extent[1] + int(coords[1])

    def check_site(self, site):
        if not 0 <= site < self.n_sites:
            raise DomainError(f"site {site} outside lattice with {self.n_sites} sites")

    def distance(self, i, j):
        """Graph (Manhattan) distance between two sites."""
        return sum(abs(a - b) for a, b in zip(self.coords(i), self.coords(j)))

    def diameter(self, sites):
        sites = list(sites)
        if len(sites) < 2:
            return 0
        return max(self.distance(a, b) for a, b in itertools.combinations(sites, 2))

    def bonds(self):
        """Nearest-neighbour pairs (i, j) with i < j, in ascending order."""
        out = []
        for i in self.sites:
            c = self.coords(i)
            for axis in range(self.dim):
                if c[axis] + 1 < self.extent[axis]:
                    nb = list(c)
                    nb[axis] += 1
                    out.append((i, self.site(nb)))
        return sorted(out)


@dataclass(frozen=True)
class Path:
    """A chain of interaction supports Z_1, ..., Z_n with the product of their norms."""

    sets: tuple
    weight: float

    @property
    def length(self):
        return len(self.sets)


def path_count_bound(d, length):
    """Upper bound (2(2d-1))**L on the number of paths of length L (exact int)."""
    if d < 1 or length < 0:
        raise DomainError(f"need d >= 1 and L >= 0, got d={d}, L={length}")
    return (2 * (2 * d - 1)) ** int(length)


def _in_boundary(z, x):
    return bool(z & x) and not z <= x


def boundary(X, terms):
    """Supports of ``terms`` that intersect X without being contained in it.

    One entry per term, so a support carried by several terms is listed once
    per term.
    """
    x = frozenset(X)
    if not x:
        raise DomainError("boundary of an empty set is undefined")
    return [tuple(t.support) for t in terms if _in_boundary(frozenset(t.support), x)]


def _boundary_indices(x, supports):
    return [k for k, z in enumerate(supports) if _in_boundary(z, x)]


class _Graph:
    """Successor lists on the term hypergraph, built once per term list."""

    def __init__(self, terms):
        self.supports = [frozenset(t.support) for t in terms]
        self.norms = np.array([float(t.norm) for t in terms])
        self.succ = [_boundary_indices(z, self.supports) for z in self.supports]
        self.n_edges = sum(len(s) for s in self.succ)


def iter_paths(X, Y, terms, max_length, node_budget=DEFAULT_NODE_BUDGET):
    """Yield every path from X to Y of length 1..max_length, depth first.

    Paths may revisit supports; every prefix whose last set meets Y is a path
    in its own right. Raises ResourceError once more than ``node_budget``
    chain extensions have been expanded.
    """
    x, y = frozenset(X), frozenset(Y)
    if not x or not y:
        raise DomainError("X and Y must be nonempty")
    if max_length < 1:
        raise DomainError(f"max_length must be >= 1, got {max_length}")
    terms = list(terms)
    g = _Graph(terms)
    hits = [bool(z & y) for z in g.supports]
    expanded = 0
    stack = [(k,) for k in reversed(_boundary_indices(x, g.supports))]
    while stack:
        chain = stack.pop()
        expanded += 1
        if expanded > node_budget:
            raise ResourceError(f"path enumeration exceeded node budget {node_budget}")
        if hits[chain[-1]]:
            yield Path(tuple(tuple(sorted(g.supports[k])) for k in chain), float(np.prod(g.norms[list(chain)])))
        if len(chain) < max_length:
            stack.extend(chain + (k,) for k in reversed(g.succ[chain[-1]]))


def enumerate_paths(X, Y, terms, max_length, node_budget=DEFAULT_NODE_BUDGET):
    """All paths from X to Y of length <= max_length, in depth-first order.

    On budget exhaustion the ResourceError carries the paths found so far in
    ``partial``.
    """
    found = []
    try:
        for p in iter_paths(X, Y, terms, max_length, node_budget):
            found.append(p)
    except ResourceError as exc:
        raise ResourceError(str(exc), partial=found) from None
    return found


def is_valid_path(path, X, Y, terms):
    """Replay the chaining conditions for ``path`` and recompute its weight."""
    supports = {}
    for t in terms:
        supports.setdefault(frozenset(t.support), []).append(float(t.norm))
    sets = [frozenset(z) for z in path.sets]
    if not sets or any(z not in supports for z in sets):
        return False
    if not _in_boundary(sets[0], frozenset(X)):
        return False
    if any(not _in_boundary(b, a) for a, b in zip(sets, sets[1:])):
        return False
    if not sets[-1] & frozenset(Y):
        return False
    # multiple terms on one support: the weight must match one choice of norms
    candidates = [supports[z] for z in sets]
    return any(np.isclose(np.prod(c), path.weight, rtol=1e-12, atol=0) for c in itertools.product(*candidates))


def path_weight_sums(X, Y, terms, max_length, node_budget=DEFAULT_NODE_BUDGET):
    """Total weight of all X -> Y paths, per length 0..max_length.

    Same set of paths as ``iter_paths`` summed by dynamic programming over the
    hypergraph, so cost grows linearly in the length instead of exponentially.
    Entry 0 is 1 when X and Y intersect (the empty path) and 0 otherwise.
    """
    try:
        logs = path_log_weight_sums(X, Y, terms, max_length, node_budget)
    except ResourceError as exc:
        with np.errstate(over="ignore"):
            raise ResourceError(str(exc), partial=np.exp(exc.partial)) from None
    with np.errstate(over="ignore"):
        return np.exp(logs)


def path_log_weight_sums(X, Y, terms, max_length, node_budget=DEFAULT_NODE_BUDGET):
    """Natural log of ``path_weight_sums`` (-inf where no path exists).

    The DP state is renormalized every step, so long paths do not overflow.
    """
    x, y = frozenset(X), frozenset(Y)
    if not x or not y:
        raise DomainError("X and Y must be nonempty")
    terms = list(terms)
    g = _Graph(terms)
    logs = np.full(max_length + 1, -np.inf)
    logs[0] = 0.0 if x & y else -np.inf
    if not terms or max_length < 1:
        return logs
    hits = np.array([bool(z & y) for z in g.supports])
    weight = np.zeros(len(terms))
    start = _boundary_indices(x, g.supports)
    weight[start] = g.norms[start]
    scale = 0.0
    src = np.repeat(np.arange(len(terms)), [len(s) for s in g.succ])
    dst = np.array([k for s in g.succ for k in s], dtype=int)
    expanded = len(start)
    with np.errstate(divide="ignore"):
        logs[1] = np.log(weight[hits].sum())
        for length in range(2, max_length + 1):
            expanded += g.n_edges
            if expanded > node_budget:
                raise ResourceError(f"path weight sums exceeded node budget {node_budget}", partial=logs[:length])
            nxt = np.zeros(len(terms))
            np.add.at(nxt, dst, weight[src])
            weight = nxt * g.norms
            top = weight.max()
            if top > 0:
                weight /= top
                scale += math.log(top)
            logs[length] = scale + np.log(weight[hits].sum())
    return logs


def branching_factor(X, terms):
    """Largest number of choices at any chain step from X, so #paths(L) <= b**L.

    For nearest-neighbour bonds on a d-dimensional lattice this is 2(2d-1).
    """
    terms = list(terms)
    if not terms:
        return 0
    g = _Graph(terms)
    first = len(_boundary_indices(frozenset(X), g.supports))
    return max([first] + [len(s) for s in g.succ])
