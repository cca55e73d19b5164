"""Local cellular-automaton (sweep rule) decoders for homological codes on tori."""
from .complex import CellComplex, Chain, ComplexError
from .lattices import Lattice, LatticeSpec, build

__version__ = "0.1.0"

__all__ = ["CellComplex", "Chain", "ComplexError", "Lattice", "LatticeSpec", "build"]
