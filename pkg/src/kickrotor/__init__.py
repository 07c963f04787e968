"""Quantum kicked rotor driven by two-frequency kick trains.

Simulates sub-Fourier frequency resolution of the atomic kicked rotor:
kick schedules, split-operator dynamics on a momentum ladder, p(0)
resonance scans and closed-form spectra of the kick trains.
"""
from .kernels import BACKEND
from .params import AliasingError, ConfigError, SimParams

__version__ = "0.1.0"

__all__ = ["BACKEND", "AliasingError", "ConfigError", "SimParams", "__version__"]
