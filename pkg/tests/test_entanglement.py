"""Tests for basis reconstruction and logarithmic negativity.

Frozen reference values:

* Bell pair (|00> + |11>)/sqrt(2): negativity exactly 1.
* Truncated two-mode squeezed vacuum, r = 0.3: E_N = 2r/ln 2.  The Schmidt
  form also fixes the trace norm of the partial transpose to
  (sum_n tanh^n r / cosh r)^2 = e^{2r}, which is asserted independently.
"""

import numpy as np
import pytest
from scipy.linalg import expm

from entbath.entanglement import (
    LocalFrameObserver,
    PolaronMap,
    ResonatorObserver,
    log_negativity,
    resonator_state,
    to_dressed_basis,
    to_local_basis,
)
from entbath.errors import InvalidArgumentError, InvalidConfigurationError
from entbath.operators import (
    HilbertGeometry,
    as_density_state,
    fock_basis,
    partial_trace,
)
from entbath.system import SystemParams

TMSV_SQUEEZING = 0.3
TMSV_LOG_NEGATIVITY = 0.8656170245  # 2r/ln 2 at r = 0.3
EXACT_TOL = 1e-12

RNG = np.random.default_rng(20260823)


def bell_state():
    geo = HilbertGeometry.resonators_only(2, 2)
    psi = np.zeros(4, dtype=complex)
    psi[0] = psi[3] = 1 / np.sqrt(2)
    return as_density_state(np.outer(psi, psi.conj()), geo)


def tmsv_state(n=10, r=TMSV_SQUEEZING):
    geo = HilbertGeometry.resonators_only(n, n)
    coeff = np.tanh(r) ** np.arange(n) / np.cosh(r)
    psi = np.zeros(n * n, dtype=complex)
    for k in range(n):
        psi[k * n + k] = coeff[k]
    rho = np.outer(psi, psi.conj())
    rho /= np.trace(rho).real
    return geo, coeff, as_density_state(rho, geo)


def random_pure(geo, rng=RNG):
    d = geo.total_dim
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi /= np.linalg.norm(psi)
    return as_density_state(np.outer(psi, psi.conj()), geo)


def haar_unitary(d, rng=RNG):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


class TestLogNegativity:
    def test_bell_state_is_one(self):
        assert log_negativity(bell_state()) == pytest.approx(1.0, abs=1e-12)

    def test_two_mode_squeezed_vacuum(self):
        geo, coeff, state = tmsv_state()
        en = log_negativity(state)
        assert en == pytest.approx(TMSV_LOG_NEGATIVITY, abs=1e-3)
        # Schmidt identity: trace norm of the partial transpose is
        # (sum of Schmidt coefficients)^2 -> e^{2r} up to truncation.
        assert 2 ** en == pytest.approx(np.sum(coeff) ** 2, rel=1e-9)
        # Truncating at ten levels leaves a tanh(r)^10 ~ 4e-6 relative tail.
        assert np.sum(coeff) ** 2 == pytest.approx(
            np.exp(2 * TMSV_SQUEEZING), rel=1e-4
        )

    def test_product_state_is_zero(self):
        geo = HilbertGeometry.resonators_only(3, 3)
        rho1 = RNG.standard_normal((3, 3)) + 1j * RNG.standard_normal((3, 3))
        rho1 = rho1 @ rho1.conj().T
        rho1 /= np.trace(rho1)
        rho2 = RNG.standard_normal((3, 3)) + 1j * RNG.standard_normal((3, 3))
        rho2 = rho2 @ rho2.conj().T
        rho2 /= np.trace(rho2)
        state = as_density_state(np.kron(rho1, rho2), geo)
        assert log_negativity(state) == 0.0

    def test_classical_mixture_of_products_is_zero(self):
        geo = HilbertGeometry.resonators_only(2, 2)
        rho = np.zeros((4, 4), dtype=complex)
        rho[0, 0] = 0.5  # |00><00|
        rho[3, 3] = 0.5  # |11><11|
        assert log_negativity(as_density_state(rho, geo)) == 0.0

    def test_maximally_mixed_is_zero(self):
        geo = HilbertGeometry.resonators_only(3, 3)
        state = as_density_state(np.eye(9, dtype=complex) / 9, geo)
        assert log_negativity(state) == 0.0

    def test_site_symmetry(self):
        geo = HilbertGeometry.resonators_only(3, 3)
        for seed in range(4):
            state = random_pure(geo, np.random.default_rng(seed))
            assert log_negativity(state, site=1) == pytest.approx(
                log_negativity(state, site=2), abs=1e-10
            )

    def test_local_unitary_invariance(self):
        geo = HilbertGeometry.resonators_only(3, 3)
        rng = np.random.default_rng(5)
        psi1 = random_pure(geo, rng).matrix
        psi2 = random_pure(geo, rng).matrix
        rho = 0.65 * psi1 + 0.35 * psi2
        u_local = np.kron(haar_unitary(3, rng), haar_unitary(3, rng))
        rotated = u_local @ rho @ u_local.conj().T
        before = log_negativity(as_density_state(rho, geo))
        after = log_negativity(as_density_state(rotated, geo))
        assert after == pytest.approx(before, abs=1e-9)

    def test_mixing_with_identity_never_increases(self):
        state = bell_state()
        d = 4
        eye = np.eye(d, dtype=complex) / d
        values = []
        for p in np.linspace(0.0, 1.0, 11):
            rho = (1 - p) * state.matrix + p * eye
            values.append(
                log_negativity(as_density_state(rho, state.geometry))
            )
        diffs = np.diff(values)
        assert np.all(diffs <= 1e-12)


class TestPolaronMap:
    def make(self, alpha=0.15, omega=(0.4, 0.2), n=5, kind="tls"):
        params = SystemParams.from_alpha(1.0, omega, alpha, ancilla_kind=kind)
        if kind == "tls":
            geo = HilbertGeometry.tls(n, n)
        else:
            geo = HilbertGeometry.oscillator(3, n, n)
        return params, geo, PolaronMap(params, geo)

    def test_time_zero_matches_static_unitary(self):
        _, _, pmap = self.make()
        assert np.max(np.abs(pmap.at_time(0.0).matrix - pmap.u.matrix)) < 1e-13

    def test_time_dependent_map_is_unitary(self):
        _, geo, pmap = self.make()
        for t in (0.7, 13.9, 1e4):
            u = pmap.at_time(t).matrix
            dev = u.conj().T @ u - np.eye(geo.total_dim)
            assert np.max(np.abs(dev)) < 1e-12

    def test_commensurate_periodicity(self):
        _, _, pmap = self.make(omega=(0.4, 0.2))
        period = 2 * np.pi / 0.2
        dev = pmap.at_time(period).matrix - pmap.at_time(0.0).matrix
        assert np.max(np.abs(dev)) < 1e-10

    def test_zero_alpha_is_identity(self):
        _, geo, pmap = self.make(alpha=0.0)
        assert np.max(np.abs(pmap.u.matrix - np.eye(geo.total_dim))) < 1e-13
        assert (
            np.max(np.abs(pmap.at_time(3.7).matrix - np.eye(geo.total_dim)))
            < 1e-13
        )

    def test_unitarity_leakage_is_tiny(self):
        _, _, pmap = self.make(alpha=0.25)
        assert pmap.unitarity_leakage() < 1e-12

    def test_oscillator_ground_block_is_identity(self):
        _, geo, pmap = self.make(kind="oscillator")
        n1, n2 = geo.fock_dims
        block = pmap.at_time(2.3).matrix[: n1 * n2, : n1 * n2]
        assert np.max(np.abs(block - np.eye(n1 * n2))) < 1e-13

    def test_reduced_geometry_rejected(self):
        params = SystemParams.from_alpha(1.0, (0.4, 0.2), 0.1)
        with pytest.raises(InvalidConfigurationError):
            PolaronMap(params, HilbertGeometry.resonators_only(4, 4))


class TestToLocalBasis:
    def test_roundtrip(self):
        params = SystemParams.from_alpha(1.0, (0.4, 0.2), 0.2)
        geo = HilbertGeometry.tls(5, 5)
        pmap = PolaronMap(params, geo)
        sigma = random_pure(geo, np.random.default_rng(8))
        local = to_local_basis(sigma, pmap)
        u = pmap.u.matrix
        back = u.conj().T @ local.matrix @ u
        assert np.max(np.abs(back - sigma.matrix)) < 1e-10

    def test_zero_alpha_is_identity_map(self):
        params = SystemParams.from_alpha(1.0, (0.4, 0.2), 0.0)
        geo = HilbertGeometry.tls(4, 4)
        pmap = PolaronMap(params, geo)
        sigma = random_pure(geo, np.random.default_rng(9))
        local = to_local_basis(sigma, pmap)
        assert np.max(np.abs(local.matrix - sigma.matrix)) < 1e-13

    def test_purity_preserved(self):
        params = SystemParams.from_alpha(1.0, (0.4, 0.2), 0.2)
        geo = HilbertGeometry.tls(5, 5)
        pmap = PolaronMap(params, geo)
        sigma = random_pure(geo, np.random.default_rng(10))
        local = to_local_basis(sigma, pmap, time=4.2)
        purity = np.trace(local.matrix @ local.matrix).real
        assert purity == pytest.approx(1.0, abs=1e-8)

    def test_trace_defect_rejected(self):
        params = SystemParams.from_alpha(1.0, (0.4, 0.2), 0.1)
        geo = HilbertGeometry.tls(4, 4)
        pmap = PolaronMap(params, geo)
        bad = as_density_state(
            0.9 * np.eye(geo.total_dim, dtype=complex) / geo.total_dim,
            geo,
            validate=False,
        )
        with pytest.raises(InvalidArgumentError):
            to_local_basis(bad, pmap)

    def test_geometry_mismatch_rejected(self):
        params = SystemParams.from_alpha(1.0, (0.4, 0.2), 0.1)
        pmap = PolaronMap(params, HilbertGeometry.tls(4, 4))
        other = random_pure(HilbertGeometry.tls(5, 5))
        with pytest.raises(InvalidArgumentError):
            to_local_basis(other, pmap)


class TestToDressedBasis:
    def make(self):
        params = SystemParams.from_alpha(1.0, (0.4, 0.2), 0.2)
        geo = HilbertGeometry.tls(5, 5)
        return geo, PolaronMap(params, geo)

    def test_inverse_of_to_local_basis(self):
        geo, pmap = self.make()
        sigma = random_pure(geo, np.random.default_rng(14))
        back = to_dressed_basis(to_local_basis(sigma, pmap), pmap)
        assert np.max(np.abs(back.matrix - sigma.matrix)) < 1e-10

    def test_inverse_at_nonzero_time(self):
        geo, pmap = self.make()
        rho = random_pure(geo, np.random.default_rng(15))
        back = to_local_basis(to_dressed_basis(rho, pmap, time=7.3), pmap, time=7.3)
        assert np.max(np.abs(back.matrix - rho.matrix)) < 1e-10

    def test_thermal_preparation_stays_a_state(self):
        from entbath.operators import thermal_factor_state

        geo, pmap = self.make()
        n1, n2 = geo.fock_dims
        tls_ground = np.zeros((2, 2), dtype=complex)
        tls_ground[1, 1] = 1.0
        rho_local = np.kron(
            tls_ground,
            np.kron(
                thermal_factor_state(n1, 1.0), thermal_factor_state(n2, 1.0)
            ),
        )
        state = as_density_state(rho_local, geo)
        dressed = to_dressed_basis(state, pmap)
        assert np.trace(dressed.matrix).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.eigvalsh(dressed.matrix).min() > -1e-10

    def test_local_ground_is_not_dressed_ground(self):
        # The conditional displacement moves the physical ground state off
        # the dressed-frame ground state; the overlap deficit is what keeps
        # the entangling jump from seeing a dark preparation.
        geo, pmap = self.make()
        d = geo.total_dim
        n1, n2 = geo.fock_dims
        rho0 = np.zeros((d, d), dtype=complex)
        ground_index = 1 * n1 * n2
        rho0[ground_index, ground_index] = 1.0
        dressed = to_dressed_basis(as_density_state(rho0, geo), pmap)
        assert dressed.matrix[ground_index, ground_index].real < 1.0 - 1e-3

    def test_geometry_mismatch_rejected(self):
        params = SystemParams.from_alpha(1.0, (0.4, 0.2), 0.1)
        pmap = PolaronMap(params, HilbertGeometry.tls(4, 4))
        other = random_pure(HilbertGeometry.tls(5, 5))
        with pytest.raises(InvalidArgumentError):
            to_dressed_basis(other, pmap)


class TestResonatorState:
    def test_reduces_to_two_modes(self):
        geo = HilbertGeometry.tls(3, 4)
        state = random_pure(geo)
        reduced = resonator_state(state)
        assert reduced.geometry.ancilla_dim == 1
        assert reduced.geometry.fock_dims == (3, 4)
        assert np.trace(reduced.matrix).real == pytest.approx(1.0, abs=1e-12)

    def test_matches_partial_trace(self):
        geo = HilbertGeometry.tls(3, 3)
        state = random_pure(geo, np.random.default_rng(12))
        direct = partial_trace(state, keep=(1, 2))
        via = resonator_state(state)
        assert np.max(np.abs(direct.matrix - via.matrix)) < 1e-14


class TestObservers:
    def test_local_frame_observer_on_dressed_ground_state(self):
        params = SystemParams.from_alpha(1.0, (5e-4, 2.5e-4), 0.2)
        geo = HilbertGeometry.tls(4, 4)
        observer = LocalFrameObserver(params, geo)
        # local ground state |g, 0, 0> pushed into the dressed frame
        d = geo.total_dim
        rho0 = np.zeros((d, d), dtype=complex)
        ground_index = 1 * 16 + 0  # TLS basis ordering: (excited, ground)
        rho0[ground_index, ground_index] = 1.0
        u = observer.pmap.u.matrix
        sigma = u.conj().T @ rho0 @ u
        en, n1, n2, na = observer(0.0, sigma)
        assert en == pytest.approx(0.0, abs=1e-10)
        assert n1 == pytest.approx(0.0, abs=1e-10)
        assert n2 == pytest.approx(0.0, abs=1e-10)
        assert na == pytest.approx(0.0, abs=1e-10)

    def test_static_and_time_dependent_agree_at_zero(self):
        params = SystemParams.from_alpha(1.0, (5e-4, 2.5e-4), 0.2)
        geo = HilbertGeometry.tls(4, 4)
        moving = LocalFrameObserver(params, geo, time_dependent=True)
        frozen = LocalFrameObserver(params, geo, time_dependent=False)
        sigma = random_pure(geo, np.random.default_rng(13)).matrix
        assert np.allclose(moving(0.0, sigma), frozen(0.0, sigma), atol=1e-10)

    def test_resonator_observer_on_bell_state(self):
        state = bell_state()
        observer = ResonatorObserver(state.geometry)
        en, n1, n2, na = observer(0.0, state.matrix)
        assert en == pytest.approx(1.0, abs=1e-12)
        assert n1 == pytest.approx(0.5, abs=1e-12)
        assert n2 == pytest.approx(0.5, abs=1e-12)
        assert na == 0.0

    def test_resonator_observer_rejects_ancilla_geometry(self):
        with pytest.raises(InvalidConfigurationError):
            ResonatorObserver(HilbertGeometry.tls(3, 3))
