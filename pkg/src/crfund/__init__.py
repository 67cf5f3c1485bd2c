"""Root systems, gradings, harmonic curvature and explicit 2-nondegenerate CR models."""

__version__ = "0.1.0"
