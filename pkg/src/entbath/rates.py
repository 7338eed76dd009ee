"""Reduced-dynamics rates of the filtered machine and the cooling-dominance
predicate.

Tracing the ancilla out of the filtered non-degenerate generator leaves five
channel families on the two resonators: individual cooling
``gamma_down[i] D[b_i]``, individual heating ``gamma_up[i] D[b_i+]``, a
number-dephasing channel ``gamma_d D[b_i+ b_i]``, pair cooling
``Gamma_down D[b1 b2]`` and pair heating ``Gamma_up D[b1+ b2+]``.  The rates
resolve through the same spectral lookups as the Liouvillian builders; the
ancilla enters only through its occupation ``n_a``:

* ``gamma_down[i] = f_i(omega_i)``, ``gamma_up[i] = f_i(-omega_i)`` — the
  bare local lines;
* ``Gamma_down = alpha^3 f~_hot(-omega_minus) (n_a + 1)`` — ancilla raised,
  pair lowered, where ``omega_minus = omega_a - omega_1 - omega_2``;
* ``Gamma_up = alpha^3 f~_hot(omega_minus) n_a`` — ancilla lowered, pair
  raised;
* ``gamma_d = alpha^3 (f~_cold(omega_a) n_a + f~_cold(-omega_a) (n_a + 1))``.

The default ancilla occupation is the carrier fixed point of the cold
filter, ``f~_cold(-omega_a) / (f~_cold(omega_a) + f~_cold(-omega_a))``; a
live expectation value from a trajectory may be supplied instead.

Entanglement and cooling co-occur when the pair-cooling rate beats both the
pair-heating rate and every individual heating rate; ``cooling_dominance``
evaluates exactly that predicate and reports how much headroom is left.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    DegenerateConfigurationError,
    InvalidArgumentError,
    InvalidConfigurationError,
)
from .spectra import bath_response
from .system import SystemParams


@dataclass(frozen=True)
class RateSet:
    """The five reduced-channel rates plus the ancilla occupation they used.

    ``gamma_down`` / ``gamma_up`` are per-resonator pairs; ``Gamma_down`` /
    ``Gamma_up`` are the joint pair channels; ``gamma_d`` is the shared
    number-dephasing rate.  By construction
    ``Gamma_up / Gamma_down = f~(omega_minus) n_a / (f~(-omega_minus) (n_a + 1))``.
    """

    gamma_down: tuple[float, float]
    gamma_up: tuple[float, float]
    Gamma_down: float
    Gamma_up: float
    gamma_d: float
    n_a_expect: float

    def __post_init__(self):
        values = (
            *self.gamma_down,
            *self.gamma_up,
            self.Gamma_down,
            self.Gamma_up,
            self.gamma_d,
            self.n_a_expect,
        )
        if any(v < 0 for v in values):
            raise InvalidArgumentError("all reduced rates must be non-negative")

    def as_dict(self) -> dict:
        """Plain mapping for manifests and reports."""
        return {
            "gamma_down": list(self.gamma_down),
            "gamma_up": list(self.gamma_up),
            "Gamma_down": self.Gamma_down,
            "Gamma_up": self.Gamma_up,
            "gamma_d": self.gamma_d,
            "n_a_expect": self.n_a_expect,
        }


@dataclass(frozen=True)
class DominanceReport:
    """Outcome of the cooling-dominance predicate.

    ``pair_ratio`` is ``Gamma_down / Gamma_up`` and ``local_ratio`` is
    ``Gamma_down / max(gamma_up)``; ``margin`` is the smaller of the two.
    Ratios with a zero denominator and a positive numerator are infinite.
    """

    dominant: bool
    margin: float
    pair_ratio: float
    local_ratio: float

    def as_dict(self) -> dict:
        return {
            "dominant": self.dominant,
            "margin": self.margin,
            "pair_ratio": self.pair_ratio,
            "local_ratio": self.local_ratio,
        }


def _ratio(numerator: float, denominator: float) -> float:
    if denominator > 0.0:
        return numerator / denominator
    return float("inf") if numerator > 0.0 else 0.0


def ancilla_carrier_occupation(params: SystemParams, baths) -> float:
    """Fixed-point occupation of the ancilla under its cold carrier lines."""
    down = bath_response(params.omega_a, baths.cold)
    up = bath_response(-params.omega_a, baths.cold)
    total = down + up
    if total == 0.0:
        raise InvalidConfigurationError(
            "cold carrier response vanishes at the ancilla frequency;"
            " cannot infer the ancilla occupation"
        )
    return up / total


def effective_rates(
    params: SystemParams, baths, n_a_expect: float | None = None
) -> RateSet:
    """Evaluate the reduced-channel rates for a filtered non-degenerate
    configuration.

    ``baths`` provides hot/cold/local1/local2 reservoirs; hot and cold must
    carry filters (hot around the joint lower sideband, cold around the
    ancilla carrier).  ``n_a_expect`` defaults to the cold carrier fixed
    point.
    """
    if params.degenerate:
        raise DegenerateConfigurationError(
            "the reduced-rate formulas assume distinct resonator frequencies"
        )
    for name in ("hot", "cold"):
        if getattr(baths, name).filter is None:
            raise InvalidConfigurationError(
                f"effective rates need a filter on the {name} bath"
            )
    alpha = params.require_equal_alpha()
    if n_a_expect is None:
        n_a = ancilla_carrier_occupation(params, baths)
    else:
        n_a = float(n_a_expect)
        if not n_a >= 0.0:
            raise InvalidArgumentError(
                f"ancilla occupation must be a non-negative real, got {n_a_expect!r}"
            )
    w1, w2 = params.omega
    w_minus = params.omega_a - w1 - w2
    cubed = alpha**3
    gamma_down = (
        bath_response(w1, baths.local1),
        bath_response(w2, baths.local2),
    )
    gamma_up = (
        bath_response(-w1, baths.local1),
        bath_response(-w2, baths.local2),
    )
    return RateSet(
        gamma_down=gamma_down,
        gamma_up=gamma_up,
        Gamma_down=cubed * bath_response(-w_minus, baths.hot) * (n_a + 1.0),
        Gamma_up=cubed * bath_response(w_minus, baths.hot) * n_a,
        gamma_d=cubed
        * (
            bath_response(params.omega_a, baths.cold) * n_a
            + bath_response(-params.omega_a, baths.cold) * (n_a + 1.0)
        ),
        n_a_expect=n_a,
    )


def cooling_dominance(rates: RateSet) -> DominanceReport:
    """True iff pair cooling strictly beats pair heating and every
    individual heating rate; the margin is the smaller of the two ratios."""
    worst_local = max(rates.gamma_up)
    pair_ratio = _ratio(rates.Gamma_down, rates.Gamma_up)
    local_ratio = _ratio(rates.Gamma_down, worst_local)
    dominant = (
        rates.Gamma_down > rates.Gamma_up and rates.Gamma_down > worst_local
    )
    return DominanceReport(
        dominant=dominant,
        margin=min(pair_ratio, local_ratio),
        pair_ratio=pair_ratio,
        local_ratio=local_ratio,
    )
