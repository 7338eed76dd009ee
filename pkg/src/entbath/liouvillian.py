"""Lindblad generators for the dressed ancilla-resonator system.

Builders come in three families:

* :func:`build_full_secular` — every dissipative channel the dressed weak
  coupling expansion produces through third order in the coupling ratio
  ``alpha``: ancilla carrier lines, dressed-carrier lines, one- and
  two-phonon sidebands of each resonator, joint two-resonator sidebands, and
  exchange (cross) sidebands, plus the two local channels per resonator.
* :func:`build_filtered_nondegenerate` / :func:`build_filtered_degenerate` —
  the reduced generators left over when the hot bath is filtered around the
  joint lower sideband and the cold bath around the ancilla carrier.
* :func:`build_dent_only` / :func:`build_arenz_reference` — two-resonator
  reference generators used for side-by-side comparisons of the entangling
  channel.

Each builder first emits (label, bath, frequency, alpha-order, jump) tuples
and then resolves rates through :func:`entbath.spectra.bath_response`, so a
term audit can cross-check every rate against the spectral functions.

Generators are interaction-picture by default: they contain no Hamiltonian
commutator.  A Hamiltonian can be attached with
:meth:`Liouvillian.with_hamiltonian` for comparisons that need explicit free
evolution.

Jump-operator ordering convention: ancilla-lowering factors multiply from the
left (``a_tilde @ M``), ancilla-raising factors from the right
(``M @ a_tilde.adjoint()``).  Under this rule each raising/lowering pair of
channels is an exact mutual adjoint in the truncated space, and the
two-resonator reduction identity checked in the tests holds to machine
precision.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import (
    DegenerateConfigurationError,
    InvalidArgumentError,
    InvalidConfigurationError,
    InvalidDimensionError,
)
from .operators import (
    DensityState,
    HilbertGeometry,
    QOperator,
    embed,
    fock_destroy,
    identity,
    matrix_exponential,
)
from .spectra import BathSpec, bath_response
from .system import DressedOperators, SystemParams

HAMILTONIAN_HERMITICITY_TOL = 1e-10
SUPEROPERATOR_DIM_LIMIT = 64


@dataclass(frozen=True, eq=False)
class LindbladTerm:
    """One dissipative channel: ``rate * (o rho o+ - {o+o, rho}/2)``.

    ``bath`` and ``frequency`` record which spectral line produced the rate
    (``None`` for reference generators whose rates are given directly);
    ``alpha_order`` is the power of the coupling ratio folded into ``rate``.
    """

    label: str
    jump: QOperator
    rate: float
    bath: str | None = None
    frequency: float | None = None
    alpha_order: int = 0

    def __post_init__(self):
        if not np.isfinite(self.rate) or self.rate < 0:
            raise InvalidArgumentError(
                f"term {self.label!r} has invalid rate {self.rate!r}"
            )
        if not np.all(np.isfinite(self.jump.matrix)):
            raise InvalidArgumentError(f"term {self.label!r} has non-finite jump")


def dissipator_apply(term: LindbladTerm, state: DensityState) -> np.ndarray:
    """Derivative contribution of a single channel, as a raw matrix."""
    if term.jump.geometry != state.geometry:
        raise InvalidDimensionError(
            "jump operator and state live on different geometries"
        )
    o = term.jump.matrix
    od = o.conj().T
    rho = state.matrix
    sandwich = o @ rho @ od
    odo = od @ o
    return term.rate * (sandwich - 0.5 * (odo @ rho + rho @ odo))


class Liouvillian:
    """Immutable bundle of Lindblad terms with optional Hamiltonian.

    ``apply`` evaluates the generator on a raw density matrix; terms with
    exactly zero rate are kept in ``terms`` for auditing but skipped in the
    hot path.
    """

    def __init__(
        self,
        terms: Iterable[LindbladTerm],
        geometry: HilbertGeometry,
        hamiltonian: QOperator | None = None,
    ):
        self.terms: tuple[LindbladTerm, ...] = tuple(terms)
        self.geometry = geometry
        self.hamiltonian = hamiltonian
        for term in self.terms:
            if term.jump.geometry != geometry:
                raise InvalidDimensionError(
                    f"term {term.label!r} does not share the generator geometry"
                )
        if hamiltonian is not None:
            if hamiltonian.geometry != geometry:
                raise InvalidDimensionError(
                    "hamiltonian does not share the generator geometry"
                )
            h = hamiltonian.matrix
            if np.max(np.abs(h - h.conj().T)) > HAMILTONIAN_HERMITICITY_TOL:
                raise InvalidArgumentError("hamiltonian must be Hermitian")

    def with_hamiltonian(self, hamiltonian: QOperator | None) -> "Liouvillian":
        return Liouvillian(self.terms, self.geometry, hamiltonian)

    @property
    def active_terms(self) -> tuple[LindbladTerm, ...]:
        return tuple(t for t in self.terms if t.rate > 0)

    @cached_property
    def _prepared(self):
        """Stacked scaled jumps L_k, their adjoints, sum_k L_k+ L_k, and H."""
        active = self.active_terms
        if active:
            ls = np.stack([np.sqrt(t.rate) * t.jump.matrix for t in active])
            ld = ls.conj().transpose(0, 2, 1)
            k = np.zeros((self.geometry.total_dim,) * 2, dtype=complex)
            for i in range(ls.shape[0]):
                k += ld[i] @ ls[i]
        else:
            ls = ld = None
            k = np.zeros((self.geometry.total_dim,) * 2, dtype=complex)
        h = None if self.hamiltonian is None else self.hamiltonian.matrix
        return ls, ld, k, h

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Generator action d(rho)/dt on a raw density matrix."""
        n = self.geometry.total_dim
        if rho.shape != (n, n):
            raise InvalidDimensionError(
                f"state shape {rho.shape} does not match dimension {n}"
            )
        ls, ld, k, h = self._prepared
        if ls is not None:
            out = np.matmul(ls @ rho, ld).sum(axis=0)
            out -= 0.5 * (k @ rho + rho @ k)
        else:
            out = np.zeros_like(rho, dtype=complex)
        if h is not None:
            out = out - 1j * (h @ rho - rho @ h)
        return out

    def superoperator(self) -> np.ndarray:
        """Dense matrix of the generator on row-major vectorized states."""
        n = self.geometry.total_dim
        if n > SUPEROPERATOR_DIM_LIMIT:
            raise InvalidDimensionError(
                f"dense superoperator limited to dimension {SUPEROPERATOR_DIM_LIMIT}"
                f" (got {n}); use apply() for larger problems"
            )
        eye = np.eye(n)
        sup = np.zeros((n * n, n * n), dtype=complex)
        for term in self.active_terms:
            o = term.jump.matrix
            odo = o.conj().T @ o
            sup += term.rate * (
                np.kron(o, o.conj())
                - 0.5 * np.kron(odo, eye)
                - 0.5 * np.kron(eye, odo.T)
            )
        if self.hamiltonian is not None:
            h = self.hamiltonian.matrix
            sup += -1j * (np.kron(h, eye) - np.kron(eye, h.T))
        return sup


def term_audit(liouvillian: Liouvillian) -> list[dict]:
    """Serializable channel list (label, bath, frequency, alpha-order, rate)."""
    return [
        {
            "label": t.label,
            "bath": t.bath,
            "frequency": t.frequency,
            "alpha_order": t.alpha_order,
            "rate": t.rate,
        }
        for t in liouvillian.terms
    ]


@dataclass(frozen=True)
class BathSet:
    """The four reservoirs: hot and cold on the ancilla, one local per mode."""

    hot: BathSpec
    cold: BathSpec
    local1: BathSpec
    local2: BathSpec

    def __post_init__(self):
        for name in ("hot", "cold", "local1", "local2"):
            spec = getattr(self, name)
            if spec.label != name:
                raise InvalidConfigurationError(
                    f"bath in slot {name!r} is labelled {spec.label!r}"
                )

    @property
    def locals(self) -> tuple[BathSpec, BathSpec]:
        return (self.local1, self.local2)


def _require_min_fock(geometry: HilbertGeometry, minimum: int = 3) -> None:
    if min(geometry.fock_dims) < minimum:
        raise InvalidDimensionError(
            f"generator builders need at least {minimum} Fock levels per"
            f" resonator (got {geometry.fock_dims})"
        )


def _emit(
    out: list[LindbladTerm],
    label: str,
    bath_name: str | None,
    bath: BathSpec | None,
    frequency: float | None,
    alpha_order: int,
    alpha: float,
    jump: QOperator,
) -> None:
    """Resolve the rate of one emitted channel and append it.

    Channels whose jump vanishes identically in the truncated space are
    dropped silently (for a two-level ancilla some formally distinct products
    can collapse to zero).
    """
    if not np.any(jump.matrix):
        return
    rate = float(alpha**alpha_order) * bath_response(frequency, bath)
    out.append(
        LindbladTerm(
            label=label,
            jump=jump,
            rate=rate,
            bath=bath_name,
            frequency=frequency,
            alpha_order=alpha_order,
        )
    )


def _local_terms(
    ops: DressedOperators, baths: BathSet, out: list[LindbladTerm]
) -> None:
    """The two thermal channels of each resonator's own reservoir."""
    for i, bath in enumerate(baths.locals):
        omega_i = ops.params.omega[i]
        name = f"local{i + 1}"
        bt = ops.b_tilde[i]
        _emit(out, f"b{i + 1}", name, bath, omega_i, 0, 1.0, bt)
        _emit(out, f"b{i + 1}+", name, bath, -omega_i, 0, 1.0, bt.adjoint())


def _carrier_and_dressed(
    ops: DressedOperators,
    bath_name: str,
    bath: BathSpec,
    alpha: float,
    out: list[LindbladTerm],
) -> None:
    """Ancilla carrier lines and their resonator-number-dressed corrections."""
    params = ops.params
    wa = params.omega_a
    num_tilde = [ops.b_tilde[i].adjoint() @ ops.b_tilde[i] for i in range(2)]
    _emit(out, "a", bath_name, bath, wa, 0, alpha, ops.lowering_jump(None))
    for i in range(2):
        _emit(
            out,
            f"a b{i + 1}+ b{i + 1}",
            bath_name,
            bath,
            wa,
            3,
            alpha,
            ops.lowering_jump(num_tilde[i]),
        )
    _emit(out, "a+", bath_name, bath, -wa, 0, alpha, ops.raising_jump(None))
    for i in range(2):
        _emit(
            out,
            f"a+ b{i + 1}+ b{i + 1}",
            bath_name,
            bath,
            -wa,
            3,
            alpha,
            ops.raising_jump(num_tilde[i]),
        )


def build_full_secular(
    params: SystemParams, geometry: HilbertGeometry, baths: BathSet
) -> Liouvillian:
    """Every dressed channel through third order in alpha, plus locals.

    Requires distinct resonator frequencies: with equal frequencies several
    listed lines merge and the enumeration below would double-count them.
    """
    _require_min_fock(geometry)
    if params.degenerate:
        raise DegenerateConfigurationError(
            "full secular enumeration assumes omega_1 != omega_2; use the"
            " degenerate filtered builder for equal frequencies"
        )
    alpha = params.require_equal_alpha()
    ops = DressedOperators(params, geometry)
    wa = params.omega_a
    w = params.omega
    bt = ops.b_tilde
    btd = tuple(op.adjoint() for op in bt)

    terms: list[LindbladTerm] = []
    for bath_name, bath in (("hot", baths.hot), ("cold", baths.cold)):
        _carrier_and_dressed(ops, bath_name, bath, alpha, terms)
        # One- and two-phonon sidebands of each resonator.
        for i in range(2):
            raise_part = btd[i]
            lower_part = bt[i]
            for n in (1, 2):
                order = n + 1
                up_label = f"b{i + 1}+" + ("" if n == 1 else "^2")
                down_label = f"b{i + 1}" + ("" if n == 1 else "^2")
                _emit(
                    terms,
                    f"a {up_label}",
                    bath_name,
                    bath,
                    wa - n * w[i],
                    order,
                    alpha,
                    ops.lowering_jump(raise_part),
                )
                _emit(
                    terms,
                    f"a+ {down_label}",
                    bath_name,
                    bath,
                    -wa + n * w[i],
                    order,
                    alpha,
                    ops.raising_jump(lower_part),
                )
                _emit(
                    terms,
                    f"a {down_label}",
                    bath_name,
                    bath,
                    wa + n * w[i],
                    order,
                    alpha,
                    ops.lowering_jump(lower_part),
                )
                _emit(
                    terms,
                    f"a+ {up_label}",
                    bath_name,
                    bath,
                    -wa - n * w[i],
                    order,
                    alpha,
                    ops.raising_jump(raise_part),
                )
                raise_part = raise_part @ btd[i]
                lower_part = lower_part @ bt[i]
        # Joint sidebands: both resonators raised or lowered together.
        wsum = w[0] + w[1]
        _emit(
            terms, "a b1+ b2+", bath_name, bath, wa - wsum, 3, alpha,
            ops.lowering_jump(btd[0] @ btd[1]),
        )
        _emit(
            terms, "a+ b1 b2", bath_name, bath, -wa + wsum, 3, alpha,
            ops.raising_jump(bt[0] @ bt[1]),
        )
        _emit(
            terms, "a b1 b2", bath_name, bath, wa + wsum, 3, alpha,
            ops.lowering_jump(bt[0] @ bt[1]),
        )
        _emit(
            terms, "a+ b1+ b2+", bath_name, bath, -wa - wsum, 3, alpha,
            ops.raising_jump(btd[0] @ btd[1]),
        )
        # Cross sidebands: one resonator raised while the other is lowered.
        wdiff = w[0] - w[1]
        _emit(
            terms, "a b1+ b2", bath_name, bath, wa - wdiff, 3, alpha,
            ops.lowering_jump(btd[0] @ bt[1]),
        )
        _emit(
            terms, "a+ b1 b2+", bath_name, bath, -wa + wdiff, 3, alpha,
            ops.raising_jump(bt[0] @ btd[1]),
        )
        _emit(
            terms, "a b1 b2+", bath_name, bath, wa + wdiff, 3, alpha,
            ops.lowering_jump(bt[0] @ btd[1]),
        )
        _emit(
            terms, "a+ b1+ b2", bath_name, bath, -wa - wdiff, 3, alpha,
            ops.raising_jump(btd[0] @ bt[1]),
        )
    _local_terms(ops, baths, terms)
    return Liouvillian(terms, geometry)


def _require_filters(baths: BathSet) -> None:
    for name in ("hot", "cold"):
        if getattr(baths, name).filter is None:
            raise InvalidConfigurationError(
                f"the filtered generators need a filter on the {name} bath"
            )


def build_filtered_nondegenerate(
    params: SystemParams,
    geometry: HilbertGeometry,
    baths: BathSet,
    *,
    allow_degenerate: bool = False,
) -> Liouvillian:
    """Reduced generator for distinct resonator frequencies.

    The cold bath (filtered at the ancilla carrier) keeps the carrier and
    dressed-carrier lines; the hot bath (filtered at the joint lower
    sideband ``omega_a - omega_1 - omega_2``) keeps only the pair channels;
    local reservoirs act unfiltered.  ``allow_degenerate`` exists for
    term-by-term comparisons against the degenerate builder and skips only
    the frequency-distinctness check.
    """
    _require_min_fock(geometry)
    _require_filters(baths)
    if params.degenerate and not allow_degenerate:
        raise DegenerateConfigurationError(
            "equal resonator frequencies make additional channels resonant;"
            " use build_filtered_degenerate"
        )
    if not params.degenerate:
        gap = abs(params.omega[0] - params.omega[1])
        widths = [
            bath_response(w_i, bath) - bath_response(-w_i, bath)
            for w_i, bath in zip(params.omega, baths.locals)
        ]
        if gap < 10 * max(widths):
            warnings.warn(
                "resonator frequency splitting is within ten local linewidths;"
                " the non-degenerate reduction may not be selective",
                stacklevel=2,
            )
    alpha = params.require_equal_alpha()
    ops = DressedOperators(params, geometry)
    bt = ops.b_tilde
    btd = tuple(op.adjoint() for op in bt)
    w_minus = params.omega_a - params.omega[0] - params.omega[1]

    terms: list[LindbladTerm] = []
    _carrier_and_dressed(ops, "cold", baths.cold, alpha, terms)
    _emit(
        terms, "a b1+ b2+", "hot", baths.hot, w_minus, 3, alpha,
        ops.lowering_jump(btd[0] @ btd[1]),
    )
    _emit(
        terms, "a+ b1 b2", "hot", baths.hot, -w_minus, 3, alpha,
        ops.raising_jump(bt[0] @ bt[1]),
    )
    _local_terms(ops, baths, terms)
    return Liouvillian(terms, geometry)


def build_filtered_degenerate(
    params: SystemParams, geometry: HilbertGeometry, baths: BathSet
) -> Liouvillian:
    """Reduced generator for equal resonator frequencies Omega.

    Contains everything the non-degenerate builder emits (with the joint
    sideband at ``omega_a - 2 Omega``) plus the channels that become resonant
    when the frequencies coincide: cold exchange (cross) lines at the carrier
    frequency and hot two-phonon lines of each resonator at the sideband.
    """
    _require_min_fock(geometry)
    _require_filters(baths)
    if not params.degenerate:
        raise InvalidConfigurationError(
            "the degenerate builder requires omega_1 == omega_2"
        )
    alpha = params.require_equal_alpha()
    ops = DressedOperators(params, geometry)
    bt = ops.b_tilde
    btd = tuple(op.adjoint() for op in bt)
    wa = params.omega_a
    w_minus = wa - 2 * params.omega[0]

    terms: list[LindbladTerm] = []
    _carrier_and_dressed(ops, "cold", baths.cold, alpha, terms)
    _emit(
        terms, "a b1+ b2+", "hot", baths.hot, w_minus, 3, alpha,
        ops.lowering_jump(btd[0] @ btd[1]),
    )
    _emit(
        terms, "a+ b1 b2", "hot", baths.hot, -w_minus, 3, alpha,
        ops.raising_jump(bt[0] @ bt[1]),
    )
    # Cold exchange lines: one phonon moved between the resonators.
    _emit(
        terms, "a b1+ b2", "cold", baths.cold, wa, 3, alpha,
        ops.lowering_jump(btd[0] @ bt[1]),
    )
    _emit(
        terms, "a b1 b2+", "cold", baths.cold, wa, 3, alpha,
        ops.lowering_jump(bt[0] @ btd[1]),
    )
    _emit(
        terms, "a+ b1 b2+", "cold", baths.cold, -wa, 3, alpha,
        ops.raising_jump(bt[0] @ btd[1]),
    )
    _emit(
        terms, "a+ b1+ b2", "cold", baths.cold, -wa, 3, alpha,
        ops.raising_jump(btd[0] @ bt[1]),
    )
    # Hot two-phonon lines of each resonator.
    for i in range(2):
        _emit(
            terms, f"a b{i + 1}+^2", "hot", baths.hot, w_minus, 3, alpha,
            ops.lowering_jump(btd[i] @ btd[i]),
        )
        _emit(
            terms, f"a+ b{i + 1}^2", "hot", baths.hot, -w_minus, 3, alpha,
            ops.raising_jump(bt[i] @ bt[i]),
        )
    _local_terms(ops, baths, terms)
    return Liouvillian(terms, geometry)


class DentOperators:
    """Two-resonator entangling-channel operators after the ancilla is traced.

    ``c = alpha (b1 + b2)``, ``d = b1 b2 + alpha^2``, and the jump is
    ``exp(c - c+) (d - c)``; ``weight`` is the ancilla occupation factor
    ``n_a_expect + 1`` multiplying the channel rate.  At ``alpha = 0`` the
    jump reduces to ``b1 b2`` exactly.
    """

    def __init__(
        self, alpha: float, geometry: HilbertGeometry, n_a_expect: float = 0.0
    ):
        if geometry.ancilla_kind != "none":
            raise InvalidConfigurationError(
                "the reduced entangling channel lives on the two-resonator"
                " space; use a geometry without an ancilla factor"
            )
        if n_a_expect < 0:
            raise InvalidArgumentError("ancilla occupation must be nonnegative")
        self.alpha = float(alpha)
        self.geometry = geometry
        self.weight = float(n_a_expect) + 1.0
        n1, n2 = geometry.fock_dims
        b1 = embed(fock_destroy(n1), 1, geometry)
        b2 = embed(fock_destroy(n2), 2, geometry)
        self.c = self.alpha * (b1 + b2)
        self.d = (b1 @ b2) + (self.alpha**2) * identity(geometry)
        self.jump = matrix_exponential(self.c - self.c.adjoint()) @ (self.d - self.c)


def build_dent_only(
    params: SystemParams,
    geometry: HilbertGeometry,
    rate: float,
    n_a_expect: float = 0.0,
) -> Liouvillian:
    """Single entangling channel on the two-resonator space.

    ``rate`` is the bare channel rate; the emitted term carries
    ``rate * (n_a_expect + 1)``.
    """
    _require_min_fock(geometry)
    if rate < 0:
        raise InvalidArgumentError("channel rate must be nonnegative")
    alpha = params.require_equal_alpha()
    dent = DentOperators(alpha, geometry, n_a_expect)
    term = LindbladTerm(label="ent", jump=dent.jump, rate=rate * dent.weight)
    return Liouvillian([term], geometry)


@dataclass(frozen=True)
class ArenzParams:
    """Rates and displacement amplitude of the two-jump reference scheme."""

    kappa_c: float
    kappa_d: float
    beta: float = 0.0

    def __post_init__(self):
        if self.kappa_c < 0 or self.kappa_d < 0:
            raise InvalidConfigurationError("jump rates must be nonnegative")


def build_arenz_reference(
    arenz: ArenzParams, geometry: HilbertGeometry
) -> Liouvillian:
    """Two-jump reference generator on the two-resonator space.

    Jumps: the antisymmetric single-phonon mode ``(b1 - b2)/sqrt(2)`` at rate
    ``kappa_c`` and the displaced pair jump ``b1 b2 / 2 - beta^2`` at rate
    ``kappa_d``.
    """
    if geometry.ancilla_kind != "none":
        raise InvalidConfigurationError(
            "the reference generator lives on the two-resonator space"
        )
    _require_min_fock(geometry)
    n1, n2 = geometry.fock_dims
    b1 = embed(fock_destroy(n1), 1, geometry)
    b2 = embed(fock_destroy(n2), 2, geometry)
    c_minus = (1.0 / np.sqrt(2.0)) * (b1 - b2)
    d_minus = 0.5 * (b1 @ b2) - (arenz.beta**2) * identity(geometry)
    terms = [
        LindbladTerm(label="c-", jump=c_minus, rate=arenz.kappa_c),
        LindbladTerm(label="d-", jump=d_minus, rate=arenz.kappa_d),
    ]
    return Liouvillian(terms, geometry)
