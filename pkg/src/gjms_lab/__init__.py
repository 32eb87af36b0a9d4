"""Per-mode verification of fractional GJMS boundary operators on hyperbolic models."""

__version__ = "0.1.0"
