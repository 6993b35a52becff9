"""Shared helpers for the test suite."""

import numpy as np
import pytest

from polpair import device as dv
from polpair.polarization import jones


def random_density_matrix(rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random valid 4x4 density matrix (Ginibre construction)."""
    k = rank or int(rng.integers(1, 5))
    g = rng.normal(size=(4, k)) + 1j * rng.normal(size=(4, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def werner(p: float) -> np.ndarray:
    bell = np.zeros(4, complex)
    bell[0] = bell[3] = 1 / np.sqrt(2)
    return p * np.outer(bell, bell.conj()) + (1 - p) * np.eye(4) / 4


def simple_sww(length_mm=1.5, alpha_te=2.2, alpha_tm=1.7, pmd=5.0, gamma=243.0):
    return dv.SwwSpec(length_mm=length_mm, alpha_te_db_per_cm=alpha_te,
                      alpha_tm_db_per_cm=alpha_tm, pmd_ps_per_mm=pmd,
                      gamma_per_w_m=gamma)


def lossless_layout(theta_spr=90.0):
    sww = dv.SwwSpec(1.5, 0.0, 0.0, 0.0, 243.0)
    return dv.ChipLayout(input_ssc=dv.SscSpec(), sww1=sww,
                         spr=dv.SprSpec(theta_spr), sww2=sww,
                         output_ssc=dv.SscSpec())


@pytest.fixture
def d_pump():
    return dv.PumpField(wavelength_nm=1551.1, peak_power_mw=128.0,
                        pulse_width_ps=80.0, rep_rate_mhz=100.0,
                        polarization=jones(45.0))


@pytest.fixture
def te_pump():
    return dv.PumpField(wavelength_nm=1551.1, peak_power_mw=69.0,
                        pulse_width_ps=80.0, rep_rate_mhz=100.0,
                        polarization=jones(0.0))


@pytest.fixture
def wdm_filter():
    return dv.FilterSpec(signal_center_nm=1546.4, idler_center_nm=1556.0,
                         bandwidth_nm=0.14)
