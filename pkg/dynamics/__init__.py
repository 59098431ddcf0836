"""Classification and simulation of nonhyperbolic toral automorphisms."""

__version__ = "0.1.0"
