from .bonds import bond_local, bond_term, bond_terms
from .model import MAX_DENSE_DIM, MemoryGuardError, PerturbedModel, assemble_model
from .selfenergy import SelfEnergy, self_energy

__all__ = [
    "bond_local", "bond_term", "bond_terms", "MAX_DENSE_DIM", "MemoryGuardError",
    "PerturbedModel", "assemble_model", "SelfEnergy", "self_energy",
]
