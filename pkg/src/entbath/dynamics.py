"""Time evolution, steady states, and trajectory records.

``evolve`` integrates d(rho)/dt = L[rho] with an adaptive embedded
Runge-Kutta method on the flattened density matrix, recording a fixed set
of observables at the requested times.  Integration quality is policed, not
patched: trace drift beyond the budget, positivity violations beyond the
floor, or solver failure raise typed errors instead of silently fixing the
state; within the budget the recorded states are Hermitized and
renormalized before observables are computed.

``evolve_exact`` is a slow exactness fallback for moderate dimensions: it
applies the exact propagator ``exp(L dt)`` between records through a
Krylov-type matrix-exponential action, never forming the dense
superoperator.

``steady_state`` solves L[rho] = 0 through the dense vectorized generator
and its singular value decomposition, with an explicit uniqueness check on
the null-space dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import LinearOperator, expm_multiply

from .errors import (
    IntegrationQualityError,
    InvalidArgumentError,
    InvalidDimensionError,
    NonUniqueSteadyStateError,
    NumericalFailureError,
    StiffnessError,
)
from .liouvillian import Liouvillian
from .operators import DensityState, as_density_state

DEFAULT_TOLERANCE = 1e-8
ABSOLUTE_TOLERANCE = 1e-12
TRACE_DRIFT_LIMIT = 1e-8
POSITIVITY_FLOOR = -1e-6
STEADY_RESIDUAL_FACTOR = 1e-10
NULL_SPACE_FACTOR = 1e-10
PROPAGATOR_DIM_LIMIT = 100

CSV_HEADER = "t,EN,n1,n2,na,trace_err,min_eig"


@dataclass
class Trajectory:
    """Recorded observables along one integration.

    ``times`` are in working units (ancilla frequency = 1); ``to_csv`` can
    rescale them for scenario-specific time axes.  Observable columns follow
    the canonical export schema; entries are NaN when no observer supplied
    them.
    """

    times: np.ndarray
    log_negativity: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    na: np.ndarray
    trace_error: np.ndarray
    min_eigenvalue: np.ndarray
    final_state: DensityState
    snapshots: dict[float, DensityState] | None = None

    def to_csv(self, path, time_scale: float = 1.0) -> None:
        """Write the canonical record table, one row per time."""
        columns = np.column_stack(
            [
                self.times * time_scale,
                self.log_negativity,
                self.n1,
                self.n2,
                self.na,
                self.trace_error,
                self.min_eigenvalue,
            ]
        )
        np.savetxt(
            path,
            columns,
            fmt="%.17g",
            delimiter=",",
            header=CSV_HEADER,
            comments="",
        )


def rhs(liouvillian: Liouvillian, state: DensityState) -> np.ndarray:
    """Derivative of the state under the generator, as a raw matrix."""
    if state.geometry != liouvillian.geometry:
        raise InvalidDimensionError(
            "state and generator live on different geometries"
        )
    return liouvillian.apply(state.matrix)


def _record_times(t_final, stride, record_times) -> np.ndarray:
    if record_times is not None:
        times = np.asarray(record_times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise InvalidArgumentError("need at least two record times")
        if np.any(np.diff(times) <= 0):
            raise InvalidArgumentError("record times must be strictly increasing")
        return times
    if t_final is None or t_final <= 0:
        raise InvalidArgumentError("t_final must be positive")
    if stride is None:
        stride = t_final / 200.0
    if stride <= 0:
        raise InvalidArgumentError("stride must be positive")
    n_steps = int(np.floor(t_final / stride + 1e-9))
    times = stride * np.arange(n_steps + 1)
    if times[-1] < t_final - 1e-9 * t_final:
        times = np.append(times, t_final)
    return times


class _Recorder:
    """Shared per-record bookkeeping for both integration back ends."""

    def __init__(self, liouvillian, times, observer, snapshot_times):
        self.geometry = liouvillian.geometry
        self.times = times
        self.observer = observer
        self.snapshot_times = (
            None if snapshot_times is None else np.asarray(snapshot_times, float)
        )
        n = times.size
        self.log_negativity = np.full(n, np.nan)
        self.n1 = np.full(n, np.nan)
        self.n2 = np.full(n, np.nan)
        self.na = np.full(n, np.nan)
        self.trace_error = np.zeros(n)
        self.min_eigenvalue = np.zeros(n)
        self.snapshots: dict[float, DensityState] = {}
        self._last = None

    def record(self, index: int, t: float, rho_raw: np.ndarray) -> None:
        trace = np.trace(rho_raw).real
        drift = abs(trace - 1.0)
        self.trace_error[index] = drift
        if drift > TRACE_DRIFT_LIMIT:
            raise IntegrationQualityError(
                f"trace drifted by {drift:.2e} at t={t:g}"
                f" (budget {TRACE_DRIFT_LIMIT:g})"
            )
        rho = 0.5 * (rho_raw + rho_raw.conj().T) / trace
        min_eig = float(np.linalg.eigvalsh(rho)[0])
        self.min_eigenvalue[index] = min_eig
        if min_eig < POSITIVITY_FLOOR:
            raise IntegrationQualityError(
                f"state eigenvalue {min_eig:.2e} fell below"
                f" {POSITIVITY_FLOOR:g} at t={t:g}"
            )
        if self.observer is not None:
            en, n1, n2, na = self.observer(t, rho)
            self.log_negativity[index] = en
            self.n1[index] = n1
            self.n2[index] = n2
            self.na[index] = na
        if self.snapshot_times is not None and np.any(
            np.isclose(t, self.snapshot_times, rtol=0, atol=1e-12 * max(1.0, t))
        ):
            self.snapshots[float(t)] = as_density_state(
                rho, self.geometry, validate=False
            )
        self._last = rho

    def finish(self) -> Trajectory:
        final = as_density_state(self._last, self.geometry, validate=True)
        return Trajectory(
            times=self.times,
            log_negativity=self.log_negativity,
            n1=self.n1,
            n2=self.n2,
            na=self.na,
            trace_error=self.trace_error,
            min_eigenvalue=self.min_eigenvalue,
            final_state=final,
            snapshots=self.snapshots or None,
        )


def evolve(
    liouvillian: Liouvillian,
    state0: DensityState,
    t_final: float | None = None,
    *,
    stride: float | None = None,
    record_times=None,
    tolerance: float = DEFAULT_TOLERANCE,
    observer=None,
    snapshot_times=None,
) -> Trajectory:
    """Adaptive integration of the master equation with observable records.

    Either give ``t_final`` (with optional ``stride``, default 1/200th of
    the horizon) or an explicit strictly increasing ``record_times`` grid.
    ``observer(t, rho)`` must return ``(EN, n1, n2, na)`` for a Hermitized,
    renormalized density matrix; without one those columns stay NaN.
    """
    if state0.geometry != liouvillian.geometry:
        raise InvalidDimensionError(
            "initial state and generator live on different geometries"
        )
    state0.validate()
    times = _record_times(t_final, stride, record_times)
    n = liouvillian.geometry.total_dim
    recorder = _Recorder(liouvillian, times, observer, snapshot_times)

    def derivative(t, y):
        return liouvillian.apply(y.reshape(n, n)).reshape(-1)

    solution = solve_ivp(
        derivative,
        (times[0], times[-1]),
        state0.matrix.reshape(-1).astype(complex),
        method="RK45",
        t_eval=times,
        rtol=tolerance,
        atol=ABSOLUTE_TOLERANCE,
    )
    if not solution.success:
        reached = float(solution.t[-1]) if solution.t.size else float(times[0])
        raise StiffnessError(
            f"integrator stopped at t={reached:g} of {times[-1]:g}:"
            f" {solution.message}",
            t_reached=reached,
        )
    for index, t in enumerate(times):
        recorder.record(index, float(t), solution.y[:, index].reshape(n, n))
    return recorder.finish()


def _supertrace(liouvillian: Liouvillian) -> complex:
    """Trace of the vectorized generator (Hamiltonian part contributes 0)."""
    n = liouvillian.geometry.total_dim
    total = 0.0 + 0.0j
    for term in liouvillian.active_terms:
        o = term.jump.matrix
        total += term.rate * (
            abs(np.trace(o)) ** 2 - n * np.trace(o.conj().T @ o)
        )
    return total


def evolve_exact(
    liouvillian: Liouvillian,
    state0: DensityState,
    record_times,
    *,
    observer=None,
    snapshot_times=None,
) -> Trajectory:
    """Propagate with the exact exponential map between record times.

    Intended as a cross-check for stiff or slowly relaxing cases at
    moderate dimension; cost grows quickly, so the geometry is capped.
    """
    if state0.geometry != liouvillian.geometry:
        raise InvalidDimensionError(
            "initial state and generator live on different geometries"
        )
    n = liouvillian.geometry.total_dim
    if n > PROPAGATOR_DIM_LIMIT:
        raise InvalidDimensionError(
            f"exact propagation limited to dimension {PROPAGATOR_DIM_LIMIT}"
            f" (got {n})"
        )
    state0.validate()
    times = np.asarray(record_times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
        raise InvalidArgumentError(
            "record times must be a strictly increasing grid of length >= 2"
        )
    recorder = _Recorder(liouvillian, times, observer, snapshot_times)
    operator = LinearOperator(
        (n * n, n * n),
        matvec=lambda v: liouvillian.apply(v.reshape(n, n)).reshape(-1),
        rmatvec=lambda v: liouvillian.apply(v.reshape(n, n).conj().T)
        .conj()
        .T.reshape(-1),
        dtype=complex,
    )
    trace_l = _supertrace(liouvillian)
    y = state0.matrix.reshape(-1).astype(complex)
    recorder.record(0, float(times[0]), y.reshape(n, n))
    for index in range(1, times.size):
        dt = float(times[index] - times[index - 1])
        y = expm_multiply(dt * operator, y, traceA=dt * trace_l)
        recorder.record(index, float(times[index]), y.reshape(n, n))
    return recorder.finish()


def steady_state(liouvillian: Liouvillian) -> DensityState:
    """Unique fixed point of the generator via the vectorized null space."""
    n = liouvillian.geometry.total_dim
    sup = liouvillian.superoperator()
    _, singulars, vh = np.linalg.svd(sup)
    largest = float(singulars[0])
    if largest == 0.0:
        raise NonUniqueSteadyStateError(
            "generator is identically zero", null_dimension=n * n
        )
    threshold = NULL_SPACE_FACTOR * largest
    null_dim = int(np.sum(singulars <= threshold))
    if null_dim == 0:
        raise NumericalFailureError(
            "no stationary solution resolved within the singular-value"
            " threshold"
        )
    if null_dim > 1:
        raise NonUniqueSteadyStateError(
            f"stationary subspace has dimension {null_dim}",
            null_dimension=null_dim,
        )
    rho = vh[-1].conj().reshape(n, n)
    rho = 0.5 * (rho + rho.conj().T)
    trace = np.trace(rho).real
    if abs(trace) < 1e-12:
        raise NumericalFailureError(
            "stationary null vector is traceless; cannot normalize"
        )
    rho = rho / trace
    residual = float(np.max(np.abs(liouvillian.apply(rho))))
    if residual > STEADY_RESIDUAL_FACTOR * largest:
        raise NumericalFailureError(
            f"stationary residual {residual:.2e} exceeds"
            f" {STEADY_RESIDUAL_FACTOR:g} x largest singular value"
        )
    return as_density_state(rho, liouvillian.geometry, validate=True)
