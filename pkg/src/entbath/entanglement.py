"""Local-basis reconstruction and logarithmic negativity.

The dressed-frame density matrix that the generators evolve is related to
the local (bare) basis by the conditional-displacement unitary ``u``:
``rho_local = u rho_tilde u+``.  Because the generators are
interaction-picture, the reconstruction at time ``t`` uses the displacement
with phase-rotated arguments ``alpha_i e^{i omega_i t}``; the remaining free
rotations are strictly local and leave the negativity unchanged, so they
are omitted.  ``PolaronMap.at_time(0)`` coincides with the static ``u``.

Entanglement is quantified by the logarithmic negativity
``log2`` of the trace norm of the partial transpose, computed by Hermitian
eigendecomposition and clamped at zero from below.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    InvalidArgumentError,
    InvalidConfigurationError,
    NumericalFailureError,
    TruncationWarningError,
)
from .operators import (
    DensityState,
    HilbertGeometry,
    QOperator,
    TRACE_TOL,
    as_density_state,
    fock_destroy,
    partial_trace,
    partial_transpose,
)
from .system import DressedOperators, SystemParams

UNITARITY_LEAKAGE_LIMIT = 1e-6


def _ancilla_charges(geometry: HilbertGeometry) -> np.ndarray:
    """Eigenvalues of the conditioning operator, one per ancilla level."""
    if geometry.ancilla_kind == "tls":
        return np.array([1.0, -1.0])
    if geometry.ancilla_kind == "oscillator":
        return np.arange(geometry.ancilla_dim, dtype=float)
    raise InvalidConfigurationError(
        "the polaron map needs an ancilla factor in the geometry"
    )


class PolaronMap:
    """Materialized dressing unitary with its time-rotated variants."""

    def __init__(self, params: SystemParams, geometry: HilbertGeometry):
        self.params = params
        self.geometry = geometry
        self.ops = DressedOperators(params, geometry)
        self.alpha = params.alpha
        self.omega = params.omega
        self.u = self.ops.u
        self._charges = _ancilla_charges(geometry)
        self._ladders = tuple(fock_destroy(n) for n in geometry.fock_dims)

    def unitarity_leakage(self) -> float:
        """Max elementwise deviation of u+u from the identity."""
        u = self.u.matrix
        return float(
            np.max(np.abs(u.conj().T @ u - np.eye(self.geometry.total_dim)))
        )

    def at_time(self, t: float) -> QOperator:
        """Dressing unitary with displacement arguments rotated to time t.

        Built block-by-block over the ancilla levels: each block is the
        product of single-mode displacements ``exp(-z (xi b+ - xi* b))``
        with ``xi_i = alpha_i e^{i omega_i t}``, so the result is exactly
        unitary in the truncated space.
        """
        from scipy.linalg import expm

        n1, n2 = self.geometry.fock_dims
        generators = []
        for alpha_i, omega_i, ladder in zip(self.alpha, self.omega, self._ladders):
            xi = alpha_i * np.exp(1j * omega_i * t)
            generators.append(xi * ladder.conj().T - np.conj(xi) * ladder)
        blocks = {}
        full = np.zeros((self.geometry.total_dim,) * 2, dtype=complex)
        block_dim = n1 * n2
        for k, charge in enumerate(self._charges):
            if charge not in blocks:
                blocks[charge] = np.kron(
                    expm(-charge * generators[0]), expm(-charge * generators[1])
                )
            sl = slice(k * block_dim, (k + 1) * block_dim)
            full[sl, sl] = blocks[charge]
        return QOperator(self.geometry, full)


def to_local_basis(
    state_tilde: DensityState, pmap: PolaronMap, time: float | None = None
) -> DensityState:
    """Undo the dressing: rho = u rho_tilde u+ (u at the given time)."""
    if state_tilde.geometry != pmap.geometry:
        raise InvalidArgumentError(
            "state and polaron map live on different geometries"
        )
    leakage = pmap.unitarity_leakage()
    if leakage > UNITARITY_LEAKAGE_LIMIT:
        raise TruncationWarningError(
            f"dressing unitarity leakage {leakage:.2e} exceeds"
            f" {UNITARITY_LEAKAGE_LIMIT}; increase the Fock truncation"
        )
    u = (pmap.u if time is None else pmap.at_time(time)).matrix
    rho = u @ state_tilde.matrix @ u.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    drift = abs(np.trace(rho).real - 1.0)
    if drift > TRACE_TOL:
        raise InvalidArgumentError(
            f"trace moved by {drift:.2e} under the basis change"
        )
    return as_density_state(rho, pmap.geometry, validate=False)


def to_dressed_basis(
    state_local: DensityState, pmap: PolaronMap, time: float | None = None
) -> DensityState:
    """Apply the dressing: rho_tilde = u+ rho u (u at the given time).

    Inverse of :func:`to_local_basis`.  Trajectories propagated by the
    dressed-frame generators must start from the image of the physical
    (local-basis) preparation under this map; feeding a local-basis state
    straight into the generators silently shifts the preparation by the
    conditional displacement.
    """
    if state_local.geometry != pmap.geometry:
        raise InvalidArgumentError(
            "state and polaron map live on different geometries"
        )
    leakage = pmap.unitarity_leakage()
    if leakage > UNITARITY_LEAKAGE_LIMIT:
        raise TruncationWarningError(
            f"dressing unitarity leakage {leakage:.2e} exceeds"
            f" {UNITARITY_LEAKAGE_LIMIT}; increase the Fock truncation"
        )
    u = (pmap.u if time is None else pmap.at_time(time)).matrix
    rho = u.conj().T @ state_local.matrix @ u
    rho = 0.5 * (rho + rho.conj().T)
    drift = abs(np.trace(rho).real - 1.0)
    if drift > TRACE_TOL:
        raise InvalidArgumentError(
            f"trace moved by {drift:.2e} under the basis change"
        )
    return as_density_state(rho, pmap.geometry, validate=False)


def resonator_state(state: DensityState) -> DensityState:
    """Reduce a three-factor state to the two resonators."""
    return partial_trace(state, keep=(1, 2))


def log_negativity(state: DensityState, site: int = 2) -> float:
    """log2 of the trace norm of the partial transpose, clamped at zero."""
    pt = partial_transpose(state, site=site)
    pt = 0.5 * (pt + pt.conj().T)
    try:
        eigenvalues = np.linalg.eigvalsh(pt)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(
            "eigendecomposition of the partial transpose failed"
        ) from exc
    trace_norm = float(np.sum(np.abs(eigenvalues)))
    return float(np.log2(max(1.0, trace_norm)))


class LocalFrameObserver:
    """Per-record observables for dressed-frame trajectories.

    Reconstructs the local-basis state at each record time and returns
    ``(EN, n1, n2, na)``: the resonator-resonator logarithmic negativity
    and the three local occupation numbers.  With ``time_dependent=False``
    the static dressing unitary is used at every time.
    """

    def __init__(
        self,
        params: SystemParams,
        geometry: HilbertGeometry,
        time_dependent: bool = True,
    ):
        self.pmap = PolaronMap(params, geometry)
        self.time_dependent = time_dependent
        ops = self.pmap.ops
        self._numbers = tuple(op.matrix for op in ops.number)
        self._ancilla_number = ops.ancilla_number.matrix

    def __call__(self, t: float, rho_tilde: np.ndarray):
        state = as_density_state(rho_tilde, self.pmap.geometry, validate=False)
        local = to_local_basis(
            state, self.pmap, time=(t if self.time_dependent else None)
        )
        rho = local.matrix
        n1 = float(np.trace(self._numbers[0] @ rho).real)
        n2 = float(np.trace(self._numbers[1] @ rho).real)
        na = float(np.trace(self._ancilla_number @ rho).real)
        en = log_negativity(resonator_state(local))
        return en, n1, n2, na


class ResonatorObserver:
    """Observables for bare two-resonator trajectories (no ancilla factor)."""

    def __init__(self, geometry: HilbertGeometry):
        if geometry.ancilla_kind != "none":
            raise InvalidConfigurationError(
                "this observer expects a two-resonator geometry"
            )
        self.geometry = geometry
        n1, n2 = geometry.fock_dims
        from .operators import embed

        self._numbers = tuple(
            (embed(fock_destroy(n), site, geometry).adjoint()
             @ embed(fock_destroy(n), site, geometry)).matrix
            for site, n in ((1, n1), (2, n2))
        )

    def __call__(self, t: float, rho: np.ndarray):
        state = as_density_state(rho, self.geometry, validate=False)
        n1 = float(np.trace(self._numbers[0] @ rho).real)
        n2 = float(np.trace(self._numbers[1] @ rho).real)
        en = log_negativity(state)
        return en, n1, n2, 0.0
