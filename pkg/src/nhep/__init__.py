"""Entanglement and spectra of two coupled lossy qubits near exceptional points."""

__version__ = "0.1.0"
