"""Quantum van der Pol oscillator driven by a harmonic force and by squeezing."""
__version__ = "0.1.0"

from ._backend import NAME as BACKEND
from .fock import (HilbertSpec, annihilation, build_hamiltonian, coherent_state,
                   creation, expectation, fock_state, number, thermal_state)
from .liouvillian import Liouvillian, apply, assemble, dissipator
from .params import SystemParams
from .steady import auto_cutoff, solve, steady_state

__all__ = [
    "BACKEND", "HilbertSpec", "Liouvillian", "SystemParams", "annihilation",
    "apply", "assemble", "auto_cutoff", "build_hamiltonian", "coherent_state",
    "creation", "dissipator", "expectation", "fock_state", "number", "solve",
    "steady_state", "thermal_state",
]
