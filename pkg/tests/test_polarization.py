import json

import numpy as np
import pytest

from polpair import polarization as pol
from conftest import random_density_matrix


class TestRotator:
    def test_zero_is_identity(self):
        assert np.allclose(pol.rotator_matrix(0.0), np.eye(2))

    def test_quarter_turn_maps_te_to_tm(self):
        out = pol.rotator_matrix(90.0) @ pol.TE
        assert abs(abs(np.vdot(out, pol.TM)) - 1.0) < 1e-12

    def test_rotator_86_7_te_analyzer_leakage(self):
        # transmitted power through a TE analyzer after an 86.7 deg rotation
        out = pol.rotator_matrix(86.7) @ pol.TE
        assert abs(out[0]) ** 2 == pytest.approx(3.3136e-3, rel=1e-3)

    def test_orthogonal_det_plus_one(self):
        r = pol.rotator_matrix(37.3)
        assert np.allclose(r.T @ r, np.eye(2), atol=1e-14)
        assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-14)

    def test_angle_additivity_on_grid(self):
        angles = np.linspace(-180.0, 180.0, 13)
        for a in angles:
            for b in angles:
                lhs = pol.rotator_matrix(a) @ pol.rotator_matrix(b)
                assert np.allclose(lhs, pol.rotator_matrix(a + b), atol=1e-12)

    def test_nonfinite_angle_rejected(self):
        with pytest.raises(ValueError):
            pol.rotator_matrix(float("nan"))


class TestWaveplate:
    def test_zero_retardance_is_identity(self):
        for axis in (0.0, 17.0, 45.0):
            assert np.allclose(pol.waveplate_matrix(0.0, axis), np.eye(2), atol=1e-14)

    def test_half_wave_at_zero_axis(self):
        w = pol.waveplate_matrix(180.0, 0.0)
        assert np.allclose(w, np.diag([1.0, -1.0]), atol=1e-12)

    def test_half_wave_at_22_5_maps_te_to_diagonal(self):
        out = pol.waveplate_matrix(180.0, 22.5) @ pol.TE
        assert pol.kets_equal_up_to_phase(out, pol.DIAG, tol=1e-12)

    def test_unitary(self):
        assert pol.is_unitary(pol.waveplate_matrix(90.0, 33.0), tol=1e-12)


class TestTensor:
    def test_identity(self):
        assert np.allclose(pol.tensor(np.eye(2), np.eye(2)), np.eye(4))

    def test_double_rotation_on_te_te(self):
        r = pol.rotator_matrix(90.0)
        out = pol.tensor(r, r) @ pol.tensor(pol.TE, pol.TE)
        assert pol.kets_equal_up_to_phase(out, pol.tensor(pol.TM, pol.TM), tol=1e-12)

    def test_disjoint_factors_commute(self):
        a = pol.tensor(pol.rotator_matrix(37.0), np.eye(2))
        b = pol.tensor(np.eye(2), pol.rotator_matrix(-12.0))
        assert np.allclose(a @ b, b @ a, atol=1e-13)

    def test_mixed_product_rule(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a, b, c, d = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
                          for _ in range(4))
            lhs = pol.tensor(a, b) @ pol.tensor(c, d)
            rhs = pol.tensor(a @ c, b @ d)
            assert np.max(np.abs(lhs - rhs)) < 1e-12


class TestStateToDensity:
    def test_entangled_state_corners(self):
        rho = pol.state_to_density(pol.bell_state(0.0))
        for idx in ((0, 0), (0, 3), (3, 0), (3, 3)):
            assert rho[idx] == pytest.approx(0.5, abs=1e-12)

    def test_te_te_product(self):
        rho = pol.state_to_density(pol.tensor(pol.TE, pol.TE))
        expected = np.zeros((4, 4))
        expected[0, 0] = 1.0
        assert np.allclose(rho, expected, atol=1e-14)

    def test_pi_phase_flips_corner_sign(self):
        rho = pol.state_to_density(pol.bell_state(np.pi))
        assert rho[0, 3].real == pytest.approx(-0.5, abs=1e-12)
        assert rho[3, 0].real == pytest.approx(-0.5, abs=1e-12)

    def test_phase_convention_matches_density_form(self):
        # |psi> with e^{-i phi} on TM,TM gives e^{+i phi} on the
        # (TE,TE)(TM,TM| corner of rho
        phi = 0.731
        rho = pol.state_to_density(pol.bell_state(phi))
        assert rho[0, 3] == pytest.approx(0.5 * np.exp(1j * phi), abs=1e-12)

    def test_rejects_unnormalized(self):
        with pytest.raises(pol.StateValidationError):
            pol.state_to_density(np.array([1.0, 0.0, 0.0, 1.0]))


class TestApplyLocal:
    def test_identity_leaves_state(self):
        rng = np.random.default_rng(5)
        rho = random_density_matrix(rng)
        out = pol.apply_local(np.eye(2), np.eye(2), rho)
        assert np.allclose(out, rho, atol=1e-14)

    def test_purity_invariant(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            rho = random_density_matrix(rng)
            us = pol.rotator_matrix(rng.uniform(0, 360))
            ui = pol.waveplate_matrix(rng.uniform(0, 360), rng.uniform(0, 360))
            out = pol.apply_local(us, ui, rho)
            assert np.trace(out @ out).real == pytest.approx(
                np.trace(rho @ rho).real, abs=1e-10)

    def test_six_degree_rotation_populations(self):
        rho = pol.state_to_density(pol.tensor(pol.TE, pol.TE))
        r6 = pol.rotator_matrix(6.0)
        out = pol.apply_local(r6, r6, rho)
        assert out[1, 1].real == pytest.approx(0.0108068, abs=1e-6)
        assert out[2, 2].real == pytest.approx(0.0108068, abs=1e-6)

    def test_rejects_non_unitary(self):
        rho = pol.state_to_density(pol.bell_state(0.0))
        with pytest.raises(pol.StateValidationError):
            pol.apply_local(np.diag([1.0, 0.5]), np.eye(2), rho)


class TestMagicBasis:
    def test_identity_invariant(self):
        out = pol.magic_basis_transform(np.eye(4) / 4)
        assert np.allclose(out, np.eye(4) / 4, atol=1e-14)

    def test_phi_plus_is_first_magic_vector(self):
        rho = pol.state_to_density(pol.bell_state(0.0))
        out = pol.magic_basis_transform(rho)
        expected = np.zeros((4, 4))
        expected[0, 0] = 1.0
        assert np.allclose(out, expected, atol=1e-12)

    def test_trace_preserved_on_random_states(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            rho = random_density_matrix(rng)
            assert np.trace(pol.magic_basis_transform(rho)).real == pytest.approx(
                1.0, abs=1e-12)

    def test_round_trip_is_identity(self):
        rng = np.random.default_rng(8)
        rho = random_density_matrix(rng)
        back = pol.magic_basis_inverse(pol.magic_basis_transform(rho))
        assert np.max(np.abs(back - rho)) < 1e-12


class TestDensityMatrixContract:
    def test_constructors_produce_valid_states(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            rho = random_density_matrix(rng)
            pol.validate_density_matrix(rho)  # no raise

    def test_rejects_non_hermitian(self):
        bad = np.eye(4, dtype=complex) / 4
        bad[0, 1] = 0.1
        with pytest.raises(pol.StateValidationError):
            pol.validate_density_matrix(bad)

    def test_rejects_wrong_trace(self):
        with pytest.raises(pol.StateValidationError):
            pol.validate_density_matrix(np.eye(4, dtype=complex))

    def test_rejects_negative_eigenvalue(self):
        bad = np.diag([0.6, 0.5, -0.1, 0.0]).astype(complex)
        with pytest.raises(pol.StateValidationError):
            pol.validate_density_matrix(bad)


class TestSerialization:
    def test_json_round_trip(self):
        rng = np.random.default_rng(10)
        rho = random_density_matrix(rng)
        obj = json.loads(pol.dumps_density_matrix(rho))
        assert obj["basis"] == pol.BASIS_STRING
        back = pol.density_matrix_from_json(obj)
        assert np.max(np.abs(back - rho)) < 1e-15

    def test_rejects_unknown_schema(self):
        with pytest.raises(ValueError):
            pol.density_matrix_from_json({"schema": "bogus", "elements": []})
