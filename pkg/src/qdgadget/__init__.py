"""Two-body code gadgets for quantum double models and their perturbative analysis."""

__version__ = "0.1.0"
