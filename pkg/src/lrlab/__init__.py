"""Lieb-Robinson bounds versus exact signal propagation in Heisenberg spin chains."""

from .constants import HBAR, K_B, MU_B
from .lattice import Lattice, Path, boundary, enumerate_paths, path_count_bound
from .model import (
    InteractionTerm,
    SpinSystem,
    TipParameters,
    anisotropy_term,
    assemble_hamiltonian,
    heisenberg_chain,
    heisenberg_term,
    tip_operator,
    tip_term,
    zeeman_term,
)
from .spin import LocalOperator, embed, operator_norm, spin_matrices

__version__ = "0.1.0"
