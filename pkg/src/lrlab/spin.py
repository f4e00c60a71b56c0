"""Spin matrices, local operators and their embedding into the chain Hilbert space.

Local basis is |s, m> with m descending (m = s, s-1, ..., -s). The global basis
is the Kronecker product of local bases in ascending site order.
"""

import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce

import numpy as np

from .errors import DomainError, ResourceError

DEFAULT_MAX_DIM = 20000
HERMITIAN_TOL = 1e-10


def max_dim():
    """Hilbert dimension cap, overridable through ``LRLAB_MAX_DIM``."""
    env = os.environ.get("LRLAB_MAX_DIM")
    if env is None:
        return DEFAULT_MAX_DIM
    try:
        return int(env)
    except ValueError:
        raise DomainError(f"LRLAB_MAX_DIM must be an integer, got {env!r}") from None


def check_dim(dim, cap=None):
    cap = max_dim() if cap is None else cap
    if dim > cap:
        raise ResourceError(f"Hilbert dimension {dim} exceeds cap {cap}")


def as_spin(s):
    """Validate a spin quantum number and return it as a float.

    Accepts floats, ints, Fractions and strings like ``"3/2"``.
    """
    try:
        two_s = Fraction(s.strip() if isinstance(s, str) else s) * 2
    except (TypeError, ValueError, ZeroDivisionError, OverflowError):
        raise DomainError(f"invalid spin {s!r}") from None
    if two_s.denominator != 1 or two_s <= 0:
        raise DomainError(f"spin must be a positive half-integer, got {s!r}")
    return float(two_s) / 2


def local_dim(s):
    return int(round(2 * as_spin(s))) + 1


@dataclass(frozen=True, eq=False)
class SpinMatrices:
    s: float
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray

    @property
    def dim(self):
        return self.sz.shape[0]

    @property
    def identity(self):
        return np.eye(self.dim)

    def component(self, direction):
        """Return n.S for a real 3-vector ``direction``."""
        nx, ny, nz = direction
        return nx * self.sx + ny * self.sy + nz * self.sz


@lru_cache(maxsize=None)
def _spin_matrices(s):
    m = np.arange(s, -s - 1, -1)
    d = len(m)
    # raising operator: <m+1|S+|m> = sqrt(s(s+1) - m(m+1))
    splus = np.zeros((d, d))
    for k in range(1, d):
        splus[k - 1, k] = np.sqrt(s * (s + 1) - m[k] * (m[k] + 1))
    sx = (splus + splus.T) / 2 + 0j
    sy = (splus - splus.T) / 2j
    sz = np.diag(m) + 0j
    for a in (sx, sy, sz):
        a.setflags(write=False)
    return SpinMatrices(s, sx, sy, sz)


def spin_matrices(s):
    """Angular-momentum matrices for spin ``s`` in the descending-m basis."""
    return _spin_matrices(as_spin(s))


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """A dense matrix acting on an ordered set of lattice sites."""

    support: tuple
    matrix: np.ndarray

    def __post_init__(self):
        support = tuple(int(i) for i in self.support)
        if any(b <= a for a, b in zip(support, support[1:])):
            raise DomainError(f"support must be strictly increasing, got {support}")
        if support and support[0] < 0:
            raise DomainError(f"negative site index in support {support}")
        matrix = np.asarray(self.matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DomainError(f"operator matrix must be square, got shape {matrix.shape}")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "matrix", matrix)

    def check_dims(self, local_dims):
        expected = int(np.prod([local_dims[i] for i in self.support])) if self.support else 1
        if self.matrix.shape[0] != expected:
            raise DomainError(
                f"matrix dimension {self.matrix.shape[0]} does not match support dimension {expected}"
            )


def site_operator(op, site):
    return LocalOperator((site,), op)


def _local_dims_of(system):
    dims = getattr(system, "local_dims", system)
    return tuple(int(d) for d in dims)


def embed(op, system, cap=None):
    """Embed ``op`` into the full tensor-product space of ``system``.

    ``system`` may be a SpinSystem or a plain sequence of local dimensions.
    Identity acts on every site outside the support.
    """
    dims = _local_dims_of(system)
    n = len(dims)
    for i in op.support:
        if i >= n:
            raise DomainError(f"site {i} outside lattice of {n} sites")
    op.check_dims(dims)
    full = int(np.prod(dims))
    check_dim(full, cap)
    support = op.support
    if not support:
        return op.matrix[0, 0] * np.eye(full, dtype=op.matrix.dtype)
    lo, hi = support[0], support[-1]
    if support == tuple(range(lo, hi + 1)):
        left = int(np.prod(dims[:lo]))
        right = int(np.prod(dims[hi + 1:]))
        out = op.matrix
        if right > 1:
            out = np.kron(out, np.eye(right))
        if left > 1:
            out = np.kron(np.eye(left), out)
        return out
    # non-contiguous support: op (x) identity on the rest, then permute tensor legs
    rest = [i for i in range(n) if i not in support]
    order = list(support) + rest
    rest_dim = int(np.prod([dims[i] for i in rest]))
    big = np.kron(op.matrix, np.eye(rest_dim)).reshape([dims[i] for i in order] * 2)
    inv = np.argsort(order)
    big = big.transpose(list(inv) + [n + k for k in inv])
    return big.reshape(full, full)


def kron_all(mats):
    return reduce(np.kron, mats)


def is_hermitian(matrix, tol=HERMITIAN_TOL):
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return True
    return float(np.max(np.abs(matrix - matrix.conj().T))) <= tol


def operator_norm(matrix):
    """Spectral norm of a Hermitian matrix (largest absolute eigenvalue)."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {matrix.shape}")
    if not is_hermitian(matrix):
        raise DomainError("operator_norm requires a Hermitian matrix")
    if matrix.size == 0:
        return 0.0
    eig = np.linalg.eigvalsh(matrix)
    return float(np.max(np.abs(eig)))


def real_if_close(matrix):
    """Drop an identically zero imaginary part; keeps memory down for large H."""
    matrix = np.asarray(matrix)
    if np.iscomplexobj(matrix) and not np.any(matrix.imag):
        return np.ascontiguousarray(matrix.real)
    return matrix
