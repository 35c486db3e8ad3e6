"""Dissipative Rydberg pumping into Bell-singlet and antiferromagnetic states."""

__version__ = "0.1.0"
