"""Classical trace estimation for zero-discord DQC1 unitaries."""
__version__ = "0.1.0"
