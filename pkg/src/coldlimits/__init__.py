"""Cooling limits of driven harmonic refrigerators and third-law bounds.

Natural units throughout: hbar = k_B = 1, masses default to 1.
"""

__version__ = "0.1.0"

from . import bounds, cooling, currents, floquet, network, qstat  # noqa: F401
from .errors import (  # noqa: F401
    AccuracyError,
    ColdLimitsError,
    ConfigError,
    ContractError,
    DomainError,
    InstabilityError,
    InvalidInputError,
    ModelError,
    RegimeError,
    SingularCapacityError,
)
