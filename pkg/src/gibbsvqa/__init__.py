"""Variational preparation of quantum Gibbs states on two n-qubit registers."""
__version__ = "0.1.0"
