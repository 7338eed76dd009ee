"""Simulator for dissipative entanglement of two uncoupled resonators driven
through a spectrally filtered hot bath."""

from . import (  # noqa: F401
    dynamics,
    entanglement,
    errors,
    liouvillian,
    operators,
    rates,
    scenarios,
    spectra,
    system,
)

__version__ = "0.1.0"
