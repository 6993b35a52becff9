"""Spontaneous four-wave-mixing efficiency for silicon-wire waveguides.

The TE and TM guided modes differ in effective area (hence nonlinear
coefficient) and in group-velocity dispersion, which is what makes the
waveguide an effectively single-polarization pair source.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class NonlinearWaveguide:
    """Waveguide nonlinearity and dispersion inputs.

    Effective areas in um^2, beta2 in ps^2/m (signed), length in mm.
    """

    n2_m2_per_w: float
    aeff_te_um2: float
    aeff_tm_um2: float
    beta2_te_ps2_per_m: float
    beta2_tm_ps2_per_m: float
    length_mm: float

    def __post_init__(self):
        for name in ("n2_m2_per_w", "aeff_te_um2", "aeff_tm_um2", "length_mm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.aeff_te_um2 >= self.aeff_tm_um2:
            warnings.warn("TE mode is usually more confined than TM "
                          "(aeff_te < aeff_tm expected)", stacklevel=2)

    def gamma(self, lambda_p_nm: float, mode: str) -> float:
        aeff = {"TE": self.aeff_te_um2, "TM": self.aeff_tm_um2}[mode]
        return nonlinear_coefficient(self.n2_m2_per_w, lambda_p_nm, aeff)

    def beta2(self, mode: str) -> float:
        return {"TE": self.beta2_te_ps2_per_m, "TM": self.beta2_tm_ps2_per_m}[mode]


def nonlinear_coefficient(n2_m2_per_w: float, lambda_p_nm: float, aeff_um2: float) -> float:
    """gamma = 2 pi n2 / (lambda_p A_eff), in 1/(W m)."""
    if n2_m2_per_w <= 0 or lambda_p_nm <= 0 or aeff_um2 <= 0:
        raise ValueError("nonlinear_coefficient inputs must be positive")
    return 2.0 * np.pi * n2_m2_per_w / (lambda_p_nm * 1e-9 * aeff_um2 * 1e-12)


def fwm_efficiency(gamma_per_w_m: float, p_peak_mw: float, length_mm: float) -> float:
    """eta = (gamma P_peak L)^2, quadratic in both power and length."""
    if p_peak_mw < 0:
        raise ValueError("pump power must be non-negative")
    return (gamma_per_w_m * p_peak_mw * 1e-3 * length_mm * 1e-3) ** 2


def phase_mismatch(beta2_ps2_per_m: float, detuning_nm: float, lambda_p_nm: float,
                   gamma_per_w_m: float, p_peak_mw: float) -> float:
    """Delta-beta = beta2 (2 pi c dlambda / lambda^2)^2 + 2 gamma P, in 1/m."""
    lam = lambda_p_nm * 1e-9
    domega = 2.0 * np.pi * SPEED_OF_LIGHT * abs(detuning_nm) * 1e-9 / lam**2
    return beta2_ps2_per_m * 1e-24 * domega**2 + 2.0 * gamma_per_w_m * p_peak_mw * 1e-3


def conversion_spectrum(wg: NonlinearWaveguide, lambda_p_nm: float, p_peak_mw: float,
                        detunings_nm, mode: str) -> np.ndarray:
    """Idler-to-signal conversion efficiency versus pump-signal detuning.

    eta(d) = (gamma P L)^2 sinc^2(Delta-beta L / 2); even in the detuning.
    """
    detunings = np.asarray(detunings_nm, dtype=float)
    if np.any(np.abs(detunings) > 40.0):
        raise ValueError("detunings limited to +/-40 nm around the pump")
    gamma = wg.gamma(lambda_p_nm, mode)
    eta0 = fwm_efficiency(gamma, p_peak_mw, wg.length_mm)
    dbeta = np.array([
        phase_mismatch(wg.beta2(mode), d, lambda_p_nm, gamma, p_peak_mw)
        for d in detunings
    ])
    x = dbeta * wg.length_mm * 1e-3 / 2.0
    return eta0 * np.sinc(x / np.pi) ** 2


def pair_rate_per_pulse(normalized_eff: float, p_peak_mw: float, length_mm: float,
                        bandwidth_ghz: float) -> float:
    """Pairs per pulse from the normalized chip-end creation efficiency
    (pairs/pulse/GHz/W^2/cm^2): rate = eff * B * P^2 * L^2."""
    if normalized_eff <= 0 or p_peak_mw < 0 or length_mm <= 0 or bandwidth_ghz <= 0:
        raise ValueError("pair_rate_per_pulse inputs must be positive")
    return normalized_eff * bandwidth_ghz * (p_peak_mw * 1e-3) ** 2 * (length_mm * 0.1) ** 2
