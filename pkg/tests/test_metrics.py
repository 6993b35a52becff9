import numpy as np
import pytest

from polpair import metrics
from polpair import polarization as pol
from conftest import random_density_matrix, werner

BELL = pol.state_to_density(pol.bell_state(0.0))
PRODUCT = pol.state_to_density(pol.tensor(pol.TE, pol.TE))
MIXED = np.eye(4, dtype=complex) / 4


class TestPurity:
    def test_bell(self):
        assert metrics.purity(BELL) == pytest.approx(1.0, abs=1e-12)

    def test_maximally_mixed(self):
        assert metrics.purity(MIXED) == pytest.approx(0.25, abs=1e-12)

    def test_werner_half(self):
        # hand algebra: tr rho^2 = p^2 + p(1-p)/2 + (1-p)^2/4
        assert metrics.purity(werner(0.5)) == pytest.approx(0.4375, abs=1e-12)

    def test_invariant_under_local_unitaries(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            rho = random_density_matrix(rng)
            us = pol.waveplate_matrix(rng.uniform(0, 360), rng.uniform(0, 360))
            ui = pol.rotator_matrix(rng.uniform(0, 360))
            assert metrics.purity(pol.apply_local(us, ui, rho)) == pytest.approx(
                metrics.purity(rho), abs=1e-10)


class TestOffDiagonalCoherence:
    def test_bell(self):
        assert metrics.off_diagonal_coherence(BELL) == pytest.approx(1.0, abs=1e-12)

    def test_diagonal_state(self):
        assert metrics.off_diagonal_coherence(np.diag([0.4, 0.1, 0.2, 0.3])) == 0.0

    def test_scaled_corners(self):
        rho = BELL.copy()
        rho[0, 3] *= 0.93
        rho[3, 0] *= 0.93
        assert metrics.off_diagonal_coherence(rho) == pytest.approx(0.93, abs=1e-12)


class TestFidelity:
    def test_self(self):
        assert metrics.fidelity(BELL, pol.bell_state(0.0)) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert metrics.fidelity(PRODUCT, pol.tensor(pol.TM, pol.TM)) == pytest.approx(
            0.0, abs=1e-12)

    def test_maximally_mixed_vs_anything(self):
        assert metrics.fidelity(MIXED, pol.bell_state(1.3)) == pytest.approx(0.25, abs=1e-12)

    def test_rejects_unnormalized_target(self):
        with pytest.raises(ValueError):
            metrics.fidelity(BELL, np.array([1.0, 1.0, 0.0, 0.0]))


class TestFullyEntangledFraction:
    def test_bell(self):
        assert metrics.fully_entangled_fraction(BELL) == pytest.approx(1.0, abs=1e-12)

    def test_product_state_classical_bound(self):
        assert metrics.fully_entangled_fraction(PRODUCT) == pytest.approx(0.5, abs=1e-12)

    def test_maximally_mixed(self):
        assert metrics.fully_entangled_fraction(MIXED) == pytest.approx(0.25, abs=1e-12)

    def test_local_unitary_invariance(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            rho = random_density_matrix(rng)
            us = pol.waveplate_matrix(rng.uniform(0, 360), rng.uniform(0, 360))
            ui = pol.waveplate_matrix(rng.uniform(0, 360), rng.uniform(0, 360))
            rotated = pol.apply_local(us, ui, rho)
            assert metrics.fully_entangled_fraction(rotated) == pytest.approx(
                metrics.fully_entangled_fraction(rho), abs=1e-9)

    def test_any_phase_bell_reaches_one(self):
        for phi in (0.3, 1.2, np.pi, 4.4):
            rho = pol.state_to_density(pol.bell_state(phi))
            assert metrics.fully_entangled_fraction(rho) == pytest.approx(1.0, abs=1e-12)


class TestBruteForce:
    def test_bell(self):
        assert metrics.fef_bruteforce(BELL) == pytest.approx(1.0, abs=1e-4)

    def test_maximally_mixed_exact_at_any_grid(self):
        assert metrics.fef_bruteforce(MIXED, grid_density=8) == pytest.approx(0.25, abs=1e-12)

    def test_rejects_sparse_grid(self):
        with pytest.raises(ValueError):
            metrics.fef_bruteforce(BELL, grid_density=4)

    def test_oracle_agreement_sample(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            rho = random_density_matrix(rng)
            closed = metrics.fully_entangled_fraction(rho)
            brute = metrics.fef_bruteforce(rho)
            assert brute <= closed + 1e-9  # lower bound
            assert brute >= closed - 1e-4  # refinement closes the gap


class TestConcurrence:
    def test_bell(self):
        assert metrics.concurrence(BELL) == pytest.approx(1.0, abs=1e-9)

    def test_product_pure_state(self):
        assert metrics.concurrence(PRODUCT) == pytest.approx(0.0, abs=1e-9)

    def test_werner_family(self):
        # hand-evaluated spin-flip spectrum: C = max(0, (3p-1)/2)
        for p in (0.2, 1 / 3, 0.5, 0.8, 1.0):
            expected = max(0.0, (3 * p - 1) / 2)
            assert metrics.concurrence(werner(p)) == pytest.approx(expected, abs=1e-9)


class TestChshWitness:
    def test_paper_value_witnesses(self):
        assert metrics.chsh_witness(0.91) is True

    def test_half_does_not(self):
        assert metrics.chsh_witness(0.5) is False

    def test_boundary_is_strict(self):
        assert metrics.chsh_witness(1.0 / np.sqrt(2.0)) is False

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            metrics.chsh_witness(1.2)


class TestMetricReport:
    def test_report_fields_and_json(self):
        report = metrics.build_report(BELL)
        payload = report.to_json()
        assert set(payload) == {
            "purity", "fidelity_to_target", "fully_entangled_fraction",
            "concurrence", "off_diagonal_coherence", "chsh_witness",
        }
        assert payload["chsh_witness"] is True
        assert payload["fidelity_to_target"] == pytest.approx(1.0, abs=1e-12)
