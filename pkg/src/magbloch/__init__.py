"""Magnetic Bloch band structure of the Landau Hamiltonian with periodic potential."""

__version__ = "0.1.0"
