"""Secrecy-outage simulation for fluid reconfigurable intelligent surfaces.

Modules
-------
specfun    Bessel J0, log-gamma, digamma, incomplete gamma, Gauss 2F1.
geometry   Candidate grid, subareas, Bessel correlation, RIS baselines.
channel    Correlated Rayleigh draws and end-to-end SNR.
qlearn     Tabular Q-learning for element positions.
beamphase  Alternating phase alignment / MRT beamforming.
secrecy    Nakagami fitting and secrecy outage probability.
harness    Scenario configs, sweeps and architecture comparison.
"""

from .errors import (
    ConfigError,
    DegenerateChannelError,
    DomainError,
    FeasibilityError,
    FrisimError,
    NumericError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateChannelError",
    "DomainError",
    "FeasibilityError",
    "FrisimError",
    "NumericError",
    "__version__",
]
