"""Bath spectral response functions.

A bath couples to the system either directly, with a one-dimensional Ohmic
response, or through a Lorentzian filter that reshapes the Ohmic response
around a chosen resonance.  Response functions take a signed frequency: the
positive branch is the emission rate into the bath, the negative branch the
absorption rate out of it, and the two branches obey detailed balance
``f(-w) = f(w) * exp(-w/T)`` exactly.

The filtered response follows the same rule by construction: the positive
branch is the Lorentzian-weighted Ohmic rate (whose peak value at the filter
center is ``kappa/pi`` independently of the underlying Ohmic strength), and
the negative branch is defined as the positive branch scaled by the thermal
factor.  Defining the negative branch this way keeps every raising/lowering
dissipator pair in the master equation thermally consistent, which a literal
evaluation of the Lorentzian at a negative argument would destroy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad

from .errors import (
    InvalidArgumentError,
    InvalidConfigurationError,
    NumericalFailureError,
)

# exp(x) overflows double precision near x ~ 709; beyond this the Bose factor
# underflows to zero anyway.
_EXP_ARG_MAX = 700.0

_QUAD_EPSABS = 1e-12
_QUAD_EPSREL = 1e-10
_QUAD_LIMIT = 400

BATH_LABELS = ("hot", "cold", "local1", "local2")


@dataclass(frozen=True)
class FilterSpec:
    """Lorentzian filter between a bath and the system.

    ``lamb_shift_mode`` is "off" (the shift is treated as absorbed into the
    renormalized frequencies) or "cutoff", in which case the principal-value
    integral is evaluated up to ``cutoff``.
    """

    center: float
    coupling: float
    lamb_shift_mode: str = "off"
    cutoff: float | None = None

    def __post_init__(self):
        if self.coupling <= 0:
            raise InvalidConfigurationError("filter coupling must be positive")
        if self.lamb_shift_mode not in ("off", "cutoff"):
            raise InvalidConfigurationError(
                f"lamb_shift_mode must be 'off' or 'cutoff', got {self.lamb_shift_mode!r}"
            )
        if self.lamb_shift_mode == "cutoff" and (self.cutoff is None or self.cutoff <= 0):
            raise InvalidConfigurationError("cutoff mode requires a positive cutoff")


@dataclass(frozen=True)
class BathSpec:
    """One thermal bath: label, temperature, Ohmic coupling, optional filter.

    Temperatures and frequencies are in the same energy-like working units
    (k_B = hbar = 1); couplings are rates in those units.
    """

    label: str
    temperature: float
    coupling: float
    filter: FilterSpec | None = None

    def __post_init__(self):
        if self.label not in BATH_LABELS:
            raise InvalidConfigurationError(
                f"bath label must be one of {BATH_LABELS}, got {self.label!r}"
            )
        if self.temperature < 0:
            raise InvalidConfigurationError("bath temperature must be non-negative")
        if self.coupling <= 0:
            raise InvalidConfigurationError("bath coupling must be positive")


def bose_occupation(omega: float, temperature: float) -> float:
    """Mean thermal occupation of a mode at the given positive frequency."""
    if omega <= 0:
        raise InvalidArgumentError("bose_occupation requires omega > 0")
    if temperature < 0:
        raise InvalidArgumentError("temperature must be non-negative")
    if temperature == 0.0:
        return 0.0
    x = omega / temperature
    if x > _EXP_ARG_MAX:
        return 0.0
    return 1.0 / math.expm1(x)


def ohmic_response(omega: float, bath: BathSpec) -> float:
    """Ohmic emission/absorption rate at a signed frequency; zero at zero."""
    if omega == 0.0:
        return 0.0
    mag = abs(omega)
    nbar = bose_occupation(mag, bath.temperature)
    if omega > 0:
        return mag * bath.coupling * (1.0 + nbar)
    return mag * bath.coupling * nbar


def _thermal_ratio(omega: float, temperature: float) -> float:
    """exp(-omega/T) with the T = 0 and underflow limits handled."""
    if temperature == 0.0:
        return 0.0
    x = omega / temperature
    if x > _EXP_ARG_MAX:
        return 0.0
    return math.exp(-x)


def pv_integral(integrand, omega: float, cutoff: float) -> float:
    """Cauchy principal value of ``integral_0^cutoff integrand(w') / (omega - w') dw'``.

    The singular neighborhood is folded symmetrically: over [omega-d, omega+d]
    the integral equals ``integral_0^d (g(omega-s) - g(omega+s))/s ds``, which
    is regular for smooth integrands.  Outside (0, cutoff) there is no
    singularity and plain adaptive quadrature is used.
    """
    if cutoff <= 0:
        raise InvalidArgumentError("cutoff must be positive")

    def kernel(w):
        return integrand(w) / (omega - w)

    def run_quad(func, lo, hi):
        value, estimate = quad(
            func, lo, hi, epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=_QUAD_LIMIT
        )
        if not math.isfinite(value) or estimate > 1e-6 * max(1.0, abs(value)):
            raise NumericalFailureError(
                f"principal-value quadrature failed on [{lo}, {hi}] "
                f"(value {value}, error estimate {estimate})"
            )
        return value

    if omega <= 0.0 or omega >= cutoff:
        return run_quad(kernel, 0.0, cutoff)

    delta = min(omega, cutoff - omega) / 2.0
    total = 0.0
    if omega - delta > 0.0:
        total += run_quad(kernel, 0.0, omega - delta)
    if omega + delta < cutoff:
        total += run_quad(kernel, omega + delta, cutoff)

    def folded(s):
        if s == 0.0:
            return 0.0
        return (integrand(omega - s) - integrand(omega + s)) / s

    total += run_quad(folded, 0.0, delta)
    return total


def lamb_shift(omega: float, bath: BathSpec) -> float:
    """Filter-induced frequency shift from the principal-value integral of the
    bath response; returns 0 when the filter's shift mode is off."""
    if bath.filter is None:
        raise InvalidConfigurationError("lamb_shift requires a filtered bath")
    if bath.filter.lamb_shift_mode == "off":
        return 0.0
    return pv_integral(lambda w: ohmic_response(w, bath), omega, bath.filter.cutoff)


def filtered_response(omega: float, bath: BathSpec) -> float:
    """Lorentzian-filtered bath response at a signed frequency.

    Positive branch: ``(kappa/pi) * (pi f)^2 / ((w - (center + shift))^2 + (pi f)^2)``
    with ``f`` the Ohmic response at the same frequency; at the filter center
    with no shift this is exactly ``kappa/pi``.  Negative branch: the positive
    branch at ``|w|`` scaled by ``exp(-|w|/T)``, enforcing detailed balance.
    """
    if bath.filter is None:
        raise InvalidConfigurationError(
            f"bath {bath.label!r} has no filter; use ohmic_response"
        )
    if omega == 0.0:
        return 0.0
    mag = abs(omega)
    f_pos = ohmic_response(mag, bath)
    if f_pos == 0.0:
        return 0.0
    width = math.pi * f_pos
    center = bath.filter.center + lamb_shift(mag, bath)
    lorentzian = (bath.filter.coupling / math.pi) * width**2 / ((mag - center) ** 2 + width**2)
    if omega > 0:
        return lorentzian
    return lorentzian * _thermal_ratio(mag, bath.temperature)


def bath_response(omega: float, bath: BathSpec) -> float:
    """Response through the filter when one is present, bare Ohmic otherwise."""
    if bath.filter is not None:
        return filtered_response(omega, bath)
    return ohmic_response(omega, bath)
