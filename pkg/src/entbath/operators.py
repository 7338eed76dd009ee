"""Operator algebra on a truncated composite Hilbert space.

The composite space is a fixed-order tensor product (ancilla, resonator 1,
resonator 2).  The ancilla factor is a two-level system, a truncated
oscillator, or absent (dimension 1), so two-resonator problems use the same
layout with a trivial first factor.  All operators are dense complex matrices;
every public constructor returns a :class:`QOperator` that remembers its
geometry so dimension mismatches fail loudly instead of broadcasting.

Basis conventions, declared once and relied on everywhere:

* two-level ancilla basis order is (excited, ground), so
  ``sigma_z = diag(+1, -1)`` and the ground state is the second basis vector;
* Fock factors are ordered by occupation number 0..N-1;
* matrices are laid out row-major, and the vectorization used by the
  superoperator code in :mod:`entbath.liouvillian` is ``matrix.reshape(-1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import InvalidArgumentError, InvalidDimensionError, NumericalFailureError

# Validation budgets for density matrices.  The eigenvalue floor leaves room
# for truncation and integration error on top of exact positivity.
TRACE_TOL = 1e-8
HERMITICITY_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-7

_ANCILLA_KINDS = ("tls", "oscillator", "none")


@dataclass(frozen=True)
class HilbertGeometry:
    """Dimension layout of the composite space.

    ``fock_dims`` smaller than 3 are permitted so reduced states produced by
    partial traces remain representable; the master-equation builders reject
    them because two-phonon jump operators vanish below 3 levels.
    """

    ancilla_kind: str
    ancilla_dim: int
    fock_dims: tuple[int, int]

    def __post_init__(self):
        if self.ancilla_kind not in _ANCILLA_KINDS:
            raise InvalidArgumentError(
                f"ancilla_kind must be one of {_ANCILLA_KINDS}, got {self.ancilla_kind!r}"
            )
        if self.ancilla_kind == "tls" and self.ancilla_dim != 2:
            raise InvalidDimensionError("a two-level ancilla has dimension 2")
        if self.ancilla_kind == "none" and self.ancilla_dim != 1:
            raise InvalidDimensionError("ancilla_kind 'none' requires ancilla_dim 1")
        if self.ancilla_dim < 1:
            raise InvalidDimensionError("ancilla_dim must be positive")
        if len(self.fock_dims) != 2 or any(int(n) < 1 for n in self.fock_dims):
            raise InvalidDimensionError("fock_dims must be a pair of positive integers")
        object.__setattr__(self, "fock_dims", (int(self.fock_dims[0]), int(self.fock_dims[1])))

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.ancilla_dim, self.fock_dims[0], self.fock_dims[1])

    @property
    def total_dim(self) -> int:
        return self.ancilla_dim * self.fock_dims[0] * self.fock_dims[1]

    @classmethod
    def tls(cls, n1: int, n2: int | None = None) -> "HilbertGeometry":
        return cls("tls", 2, (n1, n1 if n2 is None else n2))

    @classmethod
    def oscillator(cls, ancilla_dim: int, n1: int, n2: int | None = None) -> "HilbertGeometry":
        return cls("oscillator", ancilla_dim, (n1, n1 if n2 is None else n2))

    @classmethod
    def resonators_only(cls, n1: int, n2: int | None = None) -> "HilbertGeometry":
        return cls("none", 1, (n1, n1 if n2 is None else n2))


@dataclass(frozen=True, eq=False)
class QOperator:
    """A dense operator bound to a geometry."""

    geometry: HilbertGeometry
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidDimensionError(f"operator matrix must be square, got shape {m.shape}")
        if m.shape[0] != self.geometry.total_dim:
            raise InvalidDimensionError(
                f"matrix dimension {m.shape[0]} does not match geometry "
                f"total dimension {self.geometry.total_dim}"
            )
        object.__setattr__(self, "matrix", m)

    def adjoint(self) -> "QOperator":
        return QOperator(self.geometry, self.matrix.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def expectation(self, state: "DensityState") -> float:
        """Real part of Tr(rho O); the imaginary part of a physical
        expectation of a Hermitian observable is roundoff."""
        _require_same_geometry(self.geometry, state.geometry)
        return float(np.trace(state.matrix @ self.matrix).real)

    def __matmul__(self, other: "QOperator") -> "QOperator":
        _require_same_geometry(self.geometry, other.geometry)
        return QOperator(self.geometry, self.matrix @ other.matrix)

    def __add__(self, other: "QOperator") -> "QOperator":
        _require_same_geometry(self.geometry, other.geometry)
        return QOperator(self.geometry, self.matrix + other.matrix)

    def __sub__(self, other: "QOperator") -> "QOperator":
        _require_same_geometry(self.geometry, other.geometry)
        return QOperator(self.geometry, self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "QOperator":
        return QOperator(self.geometry, self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "QOperator":
        return QOperator(self.geometry, -self.matrix)


@dataclass(frozen=True, eq=False)
class DensityState:
    """A density matrix with its geometry.

    ``validate`` checks unit trace, Hermiticity, and the eigenvalue floor;
    constructors in this package call it unless explicitly told not to, so a
    state object in circulation can be assumed physical within the budgets.
    """

    op: QOperator

    @property
    def geometry(self) -> HilbertGeometry:
        return self.op.geometry

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    def validate(
        self,
        trace_tol: float = TRACE_TOL,
        herm_tol: float = HERMITICITY_TOL,
        eig_floor: float = EIGENVALUE_FLOOR,
    ) -> "DensityState":
        m = self.matrix
        trace_err = abs(np.trace(m) - 1.0)
        if trace_err > trace_tol:
            raise InvalidArgumentError(f"density matrix trace deviates by {trace_err:.3e}")
        herm_err = np.max(np.abs(m - m.conj().T))
        if herm_err > herm_tol:
            raise InvalidArgumentError(f"density matrix non-Hermitian by {herm_err:.3e}")
        min_eig = float(np.linalg.eigvalsh((m + m.conj().T) / 2.0).min())
        if min_eig < eig_floor:
            raise InvalidArgumentError(f"density matrix minimum eigenvalue {min_eig:.3e}")
        return self


def as_density_state(
    matrix: np.ndarray, geometry: HilbertGeometry, validate: bool = True
) -> DensityState:
    state = DensityState(QOperator(geometry, matrix))
    if validate:
        state.validate()
    return state


def _require_same_geometry(a: HilbertGeometry, b: HilbertGeometry) -> None:
    if a != b:
        raise InvalidDimensionError(f"geometry mismatch: {a} vs {b}")


def fock_destroy(n_levels: int) -> np.ndarray:
    """Bosonic lowering operator on a Fock ladder truncated to n_levels."""
    if n_levels < 2:
        raise InvalidDimensionError("a Fock ladder needs at least 2 levels")
    return np.diag(np.sqrt(np.arange(1, n_levels, dtype=float)), k=1).astype(complex)


def fock_basis(n_levels: int, occupation: int) -> np.ndarray:
    if not 0 <= occupation < n_levels:
        raise InvalidArgumentError(f"occupation {occupation} outside 0..{n_levels - 1}")
    v = np.zeros(n_levels, dtype=complex)
    v[occupation] = 1.0
    return v


def thermal_factor_state(n_levels: int, nbar: float) -> np.ndarray:
    """Truncated thermal density matrix, renormalized over the kept levels.

    For nbar = 0 this is the ground-state projector.  The renormalized
    truncated state is the exact fixed point of the truncated thermal
    dissipator pair, which makes it an anchor for integrator tests.
    """
    if nbar < 0:
        raise InvalidArgumentError("mean occupation must be non-negative")
    if nbar == 0:
        p = np.zeros(n_levels)
        p[0] = 1.0
    else:
        ratio = nbar / (1.0 + nbar)
        p = ratio ** np.arange(n_levels)
        p /= p.sum()
    return np.diag(p).astype(complex)


def tls_operators() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(sigma_minus, sigma_plus, sigma_z) in the (excited, ground) basis."""
    sigma_minus = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
    sigma_plus = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    sigma_z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    return sigma_minus, sigma_plus, sigma_z


def embed(factor_op: np.ndarray, site_index: int, geometry: HilbertGeometry) -> QOperator:
    """Kronecker-embed a single-factor operator at the given site (0 = ancilla,
    1 = resonator 1, 2 = resonator 2) with identities elsewhere."""
    dims = geometry.dims
    if not 0 <= site_index < len(dims):
        raise InvalidArgumentError(f"site_index {site_index} outside 0..{len(dims) - 1}")
    factor_op = np.asarray(factor_op, dtype=complex)
    if factor_op.shape != (dims[site_index], dims[site_index]):
        raise InvalidDimensionError(
            f"factor shape {factor_op.shape} does not match dimension "
            f"{dims[site_index]} at site {site_index}"
        )
    out = np.eye(1, dtype=complex)
    for site, dim in enumerate(dims):
        out = np.kron(out, factor_op if site == site_index else np.eye(dim, dtype=complex))
    return QOperator(geometry, out)


def identity(geometry: HilbertGeometry) -> QOperator:
    return QOperator(geometry, np.eye(geometry.total_dim, dtype=complex))


def matrix_exponential(op: QOperator) -> QOperator:
    result = expm(op.matrix)
    if not np.all(np.isfinite(result)):
        raise NumericalFailureError("matrix exponential produced non-finite entries")
    return QOperator(op.geometry, result)


def partial_trace(state: DensityState, keep: tuple[int, ...] | set[int]) -> DensityState:
    """Trace out every factor not listed in ``keep``.

    The reduced state keeps the original factor order; traced-out factors are
    replaced by trivial dimension-1 slots so the three-site layout (and the
    site indexing that goes with it) survives reduction.
    """
    keep_sorted = sorted(set(int(k) for k in keep))
    if not keep_sorted:
        raise InvalidArgumentError("keep must name at least one factor")
    dims = state.geometry.dims
    if any(k < 0 or k >= len(dims) for k in keep_sorted):
        raise InvalidArgumentError(f"keep sites {keep_sorted} outside 0..{len(dims) - 1}")

    n_sites = len(dims)
    tensor = state.matrix.reshape(dims + dims)
    # Row (ket) axis of site s is s, column (bra) axis is n_sites + s; traced
    # sites contract their ket against their bra axis.
    row_subs = list(range(n_sites))
    col_subs = [s if s not in keep_sorted else n_sites + s for s in range(n_sites)]
    out_subs = [s for s in keep_sorted] + [n_sites + s for s in keep_sorted]
    reduced = np.einsum(tensor, row_subs + col_subs, out_subs)

    kept_dims = tuple(dims[k] for k in keep_sorted)
    side = int(np.prod(kept_dims))
    reduced = reduced.reshape(side, side)

    if 0 in keep_sorted:
        kind, adim = state.geometry.ancilla_kind, state.geometry.ancilla_dim
    else:
        kind, adim = "none", 1
    new_fock = tuple(
        state.geometry.fock_dims[i - 1] if i in keep_sorted else 1 for i in (1, 2)
    )
    reduced_geometry = HilbertGeometry(kind, adim, new_fock)
    return DensityState(QOperator(reduced_geometry, reduced))


def partial_transpose(state: DensityState, site: int = 2) -> np.ndarray:
    """Partial transpose of a two-resonator state with respect to one
    resonator; returns the Hermitian matrix (not a physical state)."""
    if state.geometry.ancilla_dim != 1:
        raise InvalidDimensionError(
            "partial transpose expects a state on the two resonator factors only"
        )
    if site not in (1, 2):
        raise InvalidArgumentError("transpose site must be resonator 1 or 2")
    n1, n2 = state.geometry.fock_dims
    tensor = state.matrix.reshape(n1, n2, n1, n2)
    if site == 2:
        transposed = tensor.transpose(0, 3, 2, 1)
    else:
        transposed = tensor.transpose(2, 1, 0, 3)
    return np.ascontiguousarray(transposed.reshape(n1 * n2, n1 * n2))
