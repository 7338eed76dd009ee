"""Static figure rendering for the resonator-entanglement simulator's CSV
output: log-negativity and population time series plus sweep summaries."""

from . import cli, render, spec  # noqa: F401

__version__ = "0.1.0"
