"""Open-system dynamics of a planar quantum rotor in a periodic potential.

Density-matrix and auxiliary-Wigner propagation of the thermalizing master
equation, analytic reference solutions, the classical Fokker-Planck limit and
a scenario CLI.
"""

__version__ = "0.1.0"

from .liouvillian import GeneratorSpec, total_generator
from .metrics import fidelity, trace_distance, trace_norm
from .propagator import EvolutionConfig, evolve, find_steady_state
from .state import BathParams, DensityMatrix, PotentialSpec, build_wavepacket, gibbs_state
from .units import ReducedUnits, revival_time
from .wigner import full_wigner, from_aux, to_aux

__all__ = [
    "BathParams", "DensityMatrix", "EvolutionConfig", "GeneratorSpec", "PotentialSpec", "ReducedUnits",
    "build_wavepacket", "evolve", "fidelity", "find_steady_state", "from_aux", "full_wigner",
    "gibbs_state", "revival_time", "to_aux", "total_generator", "trace_distance", "trace_norm",
]
