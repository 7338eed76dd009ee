"""System parameters and the polaron-dressed operator set.

The model couples an ancilla (two-level system or truncated oscillator) to two
resonators through an energy-field term ``z * sum_i g_i (b_i + b_i^dag)``,
where ``z`` is ``sigma_z`` for a two-level ancilla and the ancilla number
operator otherwise.  The polaron unitary

    u = exp(-z * sum_i alpha_i (b_i^dag - b_i)),      alpha_i = g_i / omega_i

removes that coupling exactly: conjugating the bare Hamiltonian with
``u^dag . u`` leaves free ancilla and resonator terms plus a constant.  The
dressed (conjugated-frame) operators the dissipative generators are written in
are

    a_t   = a * exp(-sum_i alpha_i (b_i^dag - b_i))   (a -> sigma_minus for a TLS)
    b_t_i = b_i - alpha_i * z

Composite jump operators mix ancilla and resonator dressed factors, which for
a two-level ancilla do not commute.  The ordering convention used throughout:
ancilla-lowering factors multiply from the left, ancilla-raising factors from
the right.  Under this rule each raising/lowering channel pair is an exact
mutual adjoint, and the residual ordering ambiguity only affects rates at
higher order in alpha than the generators keep.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidArgumentError, InvalidConfigurationError
from .operators import (
    HilbertGeometry,
    QOperator,
    embed,
    fock_destroy,
    matrix_exponential,
    tls_operators,
)

# alpha_i = g_i / omega_i must hold to this tolerance when both are supplied.
ALPHA_CONSISTENCY_TOL = 1e-12

# The generators drop terms beyond third order in alpha; above this the
# truncation is no longer trustworthy.
ALPHA_PERTURBATIVE_LIMIT = 0.3


@dataclass(frozen=True)
class SystemParams:
    """Frequencies and couplings of the ancilla-resonator system, in working
    units where frequencies are positive reals (omega_a = 1 for the bundled
    scenarios)."""

    omega_a: float
    omega: tuple[float, float]
    g: tuple[float, float]
    alpha: tuple[float, float]
    ancilla_kind: str = "tls"

    def __post_init__(self):
        object.__setattr__(self, "omega", (float(self.omega[0]), float(self.omega[1])))
        object.__setattr__(self, "g", (float(self.g[0]), float(self.g[1])))
        object.__setattr__(self, "alpha", (float(self.alpha[0]), float(self.alpha[1])))
        if self.omega_a <= 0 or any(w <= 0 for w in self.omega):
            raise InvalidConfigurationError("all frequencies must be positive")
        if self.ancilla_kind not in ("tls", "oscillator"):
            raise InvalidConfigurationError("ancilla_kind must be 'tls' or 'oscillator'")
        for g_i, w_i, a_i in zip(self.g, self.omega, self.alpha):
            if abs(a_i - g_i / w_i) > ALPHA_CONSISTENCY_TOL * max(1.0, abs(a_i)):
                raise InvalidConfigurationError(
                    f"alpha {a_i} inconsistent with g/omega = {g_i / w_i}"
                )
        if max(abs(a) for a in self.alpha) > ALPHA_PERTURBATIVE_LIMIT:
            warnings.warn(
                "coupling ratio alpha exceeds the perturbative budget of "
                f"{ALPHA_PERTURBATIVE_LIMIT}; dropped higher-order terms may matter",
                stacklevel=2,
            )

    @classmethod
    def from_alpha(
        cls,
        omega_a: float,
        omega: tuple[float, float],
        alpha: float | tuple[float, float],
        ancilla_kind: str = "tls",
    ) -> "SystemParams":
        if np.isscalar(alpha):
            alpha = (float(alpha), float(alpha))
        g = (alpha[0] * omega[0], alpha[1] * omega[1])
        return cls(omega_a=omega_a, omega=tuple(omega), g=g, alpha=tuple(alpha), ancilla_kind=ancilla_kind)

    @property
    def degenerate(self) -> bool:
        return self.omega[0] == self.omega[1]

    def require_equal_alpha(self) -> float:
        """The dressed-channel rate formulas assume one shared coupling ratio."""
        if self.alpha[0] != self.alpha[1]:
            raise InvalidConfigurationError(
                "this generator assumes equal coupling ratios alpha_1 == alpha_2"
            )
        return self.alpha[0]


class DressedOperators:
    """Bare and polaron-dressed operators on the composite space.

    All matrices are dense and bound to one geometry.  ``z`` is the operator
    the displacement is conditioned on (sigma_z or the ancilla number
    operator); ``displacement_generator`` is ``sum_i alpha_i (b_i^dag - b_i)``
    and ``u = exp(-z * displacement_generator)``.
    """

    def __init__(self, params: SystemParams, geometry: HilbertGeometry):
        if params.ancilla_kind != geometry.ancilla_kind:
            raise InvalidConfigurationError(
                f"params ancilla {params.ancilla_kind!r} does not match geometry "
                f"ancilla {geometry.ancilla_kind!r}"
            )
        if geometry.ancilla_kind == "none":
            raise InvalidConfigurationError("dressed operators require an ancilla factor")
        self.params = params
        self.geometry = geometry

        n1, n2 = geometry.fock_dims
        self.b = (
            embed(fock_destroy(n1), 1, geometry),
            embed(fock_destroy(n2), 2, geometry),
        )
        if geometry.ancilla_kind == "tls":
            sm, sp, sz = tls_operators()
            self.a = embed(sm, 0, geometry)
            self.z = embed(sz, 0, geometry)
        else:
            a_factor = fock_destroy(geometry.ancilla_dim)
            self.a = embed(a_factor, 0, geometry)
            self.z = embed(a_factor.conj().T @ a_factor, 0, geometry)

        self.number = tuple(op.adjoint() @ op for op in self.b)
        self.ancilla_number = self.a.adjoint() @ self.a

    @cached_property
    def displacement_generator(self) -> QOperator:
        gen = None
        for alpha_i, b_i in zip(self.params.alpha, self.b):
            piece = alpha_i * (b_i.adjoint() - b_i)
            gen = piece if gen is None else gen + piece
        return gen

    @cached_property
    def u(self) -> QOperator:
        """Polaron unitary; exactly unitary in the truncated space because its
        generator is anti-Hermitian there."""
        return matrix_exponential(-1 * (self.z @ self.displacement_generator))

    @cached_property
    def shift_exponential(self) -> QOperator:
        """exp(-sum_i alpha_i (b_i^dag - b_i)), the resonator-only displacement
        carried by the dressed ancilla lowering operator."""
        return matrix_exponential(-1 * self.displacement_generator)

    @cached_property
    def a_tilde(self) -> QOperator:
        return self.a @ self.shift_exponential

    @cached_property
    def b_tilde(self) -> tuple[QOperator, QOperator]:
        return tuple(
            b_i - alpha_i * self.z for b_i, alpha_i in zip(self.b, self.params.alpha)
        )

    def lowering_jump(self, resonator_part: QOperator | None) -> QOperator:
        """Jump with the dressed ancilla lowering operator, applied leftmost."""
        if resonator_part is None:
            return self.a_tilde
        return self.a_tilde @ resonator_part

    def raising_jump(self, resonator_part: QOperator | None) -> QOperator:
        """Jump with the dressed ancilla raising operator, applied rightmost;
        the exact adjoint of the matching lowering jump."""
        if resonator_part is None:
            return self.a_tilde.adjoint()
        return resonator_part @ self.a_tilde.adjoint()


def bare_hamiltonian(params: SystemParams, geometry: HilbertGeometry) -> QOperator:
    """Full system Hamiltonian in the bare basis: free ancilla, free
    resonators, and the energy-field coupling."""
    ops = DressedOperators(params, geometry)
    if geometry.ancilla_kind == "tls":
        ancilla_term = (params.omega_a / 2.0) * ops.z
    else:
        ancilla_term = params.omega_a * ops.z
    h = ancilla_term
    for w_i, g_i, b_i in zip(params.omega, params.g, ops.b):
        h = h + w_i * (b_i.adjoint() @ b_i) + g_i * (ops.z @ (b_i + b_i.adjoint()))
    return h


def free_resonator_hamiltonian(
    omega: tuple[float, float], geometry: HilbertGeometry
) -> QOperator:
    """sum_i omega_i b_i^dag b_i, used when a scenario evolves in the bare
    (non-rotating) frame."""
    n1, n2 = geometry.fock_dims
    b1 = embed(fock_destroy(n1), 1, geometry)
    b2 = embed(fock_destroy(n2), 2, geometry)
    return omega[0] * (b1.adjoint() @ b1) + omega[1] * (b2.adjoint() @ b2)
