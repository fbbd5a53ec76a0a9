"""Simulation and verification of Poisson invariance principles for triangular arrays."""

__version__ = "0.1.0"


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""
