"""Chip model: an ordered chain of polarization elements producing the
emitted two-photon state.

Element order is input SSC -> SWW1 -> SPR -> SWW2 -> output SSC.  Pair
generation happens in the two silicon-wire waveguides (SWW); the silicon
polarization rotator (SPR) between them swaps the roles of the TE and TM
axes.  Pairs born in SWW1 leave rotated to (nearly) TM and attenuated by
the downstream elements; pairs born in SWW2 leave as TE but were pumped by
light that was attenuated by the same upstream elements.  For a diagonally
polarized pump and identical waveguides these two reductions are equal for
any element transmittances, which is what keeps the output state balanced
(the loss-balance mechanism).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fwm
from .polarization import (
    TE,
    jones,
    rotator_matrix,
    state_to_density,
    tensor,
    validate_density_matrix,
)

ROLE_PUMP = "pump"
ROLE_SIGNAL = "signal"
ROLE_IDLER = "idler"


class DegenerateStateError(ValueError):
    """Raised when the pair-generation weights vanish (e.g. zero pump)."""


def db_to_transmittance(loss_db: float) -> float:
    return 10.0 ** (-loss_db / 10.0)


@dataclass(frozen=True)
class SscSpec:
    """Spot-size converter facet: parasitic polarization rotation per
    wavelength role plus the fibre-chip coupling loss."""

    rotation_pump_deg: float = 0.0
    rotation_signal_deg: float = 0.0
    rotation_idler_deg: float = 0.0
    coupling_loss_db: float = 0.0

    def __post_init__(self):
        if self.coupling_loss_db < 0:
            raise ValueError("coupling_loss_db must be >= 0")

    def rotation_deg(self, role: str) -> float:
        return {
            ROLE_PUMP: self.rotation_pump_deg,
            ROLE_SIGNAL: self.rotation_signal_deg,
            ROLE_IDLER: self.rotation_idler_deg,
        }[role]


@dataclass(frozen=True)
class SwwSpec:
    """Silicon-wire waveguide: polarization-dependent propagation loss,
    polarization-mode dispersion and Kerr nonlinearity (TE mode)."""

    length_mm: float
    alpha_te_db_per_cm: float
    alpha_tm_db_per_cm: float
    pmd_ps_per_mm: float
    gamma_per_w_m: float

    def __post_init__(self):
        if self.length_mm <= 0:
            raise ValueError("length_mm must be positive")
        if self.alpha_te_db_per_cm < 0 or self.alpha_tm_db_per_cm < 0:
            raise ValueError("propagation losses must be >= 0")
        if self.pmd_ps_per_mm < 0:
            raise ValueError("pmd_ps_per_mm must be >= 0")

    def transmittance(self, mode: str) -> float:
        alpha = {"TE": self.alpha_te_db_per_cm, "TM": self.alpha_tm_db_per_cm}[mode]
        return db_to_transmittance(alpha * self.length_mm / 10.0)

    def effective_length_mm(self, mode: str) -> float:
        """(1 - e^{-alpha L})/alpha: pump attenuation shortens the region
        that contributes to pair generation."""
        alpha_db = {"TE": self.alpha_te_db_per_cm, "TM": self.alpha_tm_db_per_cm}[mode]
        alpha = alpha_db / 10.0 * np.log(10.0) / 10.0  # 1/mm
        if alpha == 0.0:
            return self.length_mm
        return (1.0 - np.exp(-alpha * self.length_mm)) / alpha


@dataclass(frozen=True)
class SprSpec:
    """Silicon polarization rotator: rotation angle at the pump wavelength,
    its wavelength dispersion, and a polarization-independent loss."""

    theta_deg_at_pump: float
    dispersion_deg_per_nm: float = 0.0
    insertion_loss_db: float = 0.0

    def __post_init__(self):
        if self.insertion_loss_db < 0:
            raise ValueError("insertion_loss_db must be >= 0")

    def theta_deg(self, wavelength_nm: float, pump_wavelength_nm: float) -> float:
        return self.theta_deg_at_pump + self.dispersion_deg_per_nm * (
            wavelength_nm - pump_wavelength_nm
        )

    @property
    def transmittance(self) -> float:
        return db_to_transmittance(self.insertion_loss_db)


@dataclass(frozen=True)
class ChipLayout:
    input_ssc: SscSpec
    sww1: SwwSpec
    spr: SprSpec
    sww2: SwwSpec
    output_ssc: SscSpec
    delta_l_um: float = 0.0
    phi_rad: float | None = None
    # Phase-mismatch index for phi(delta L); device-specific, not reported.
    phase_index: float = 0.5
    # Effective birefringent delay governing coherence loss in the filter
    # window; None falls back to pmd x SWW2 length.
    dephasing_delay_ps: float | None = None

    def __post_init__(self):
        if abs(self.delta_l_um) >= 1000.0:
            raise ValueError("|delta_l_um| must be < 1000")

    def phase_rad(self, wavelength_nm: float) -> float:
        """Relative phase between the two pair-generation paths."""
        if self.phi_rad is not None:
            return self.phi_rad
        return 2.0 * np.pi * self.phase_index * self.delta_l_um * 1e3 / wavelength_nm

    def effective_dephasing_delay_ps(self) -> float:
        if self.dephasing_delay_ps is not None:
            return self.dephasing_delay_ps
        return self.sww2.pmd_ps_per_mm * self.sww2.length_mm


@dataclass(frozen=True)
class PumpField:
    wavelength_nm: float
    peak_power_mw: float
    pulse_width_ps: float
    rep_rate_mhz: float
    polarization: np.ndarray = field(default_factory=lambda: jones(45.0))

    def __post_init__(self):
        for name in ("wavelength_nm", "peak_power_mw", "pulse_width_ps", "rep_rate_mhz"):
            if getattr(self, name) < 0 or (name != "peak_power_mw" and getattr(self, name) == 0):
                raise ValueError(f"{name} must be positive")
        pol = np.asarray(self.polarization, dtype=complex)
        if abs(np.linalg.norm(pol) - 1.0) > 1e-9:
            raise ValueError("pump polarization must be unit norm")
        object.__setattr__(self, "polarization", pol)


@dataclass(frozen=True)
class FilterSpec:
    """WDM demultiplexer: one channel per photon, common bandwidth."""

    signal_center_nm: float
    idler_center_nm: float
    bandwidth_nm: float
    shape: str = "rectangular"

    def __post_init__(self):
        if self.bandwidth_nm <= 0:
            raise ValueError("bandwidth_nm must be positive")
        if self.shape not in ("rectangular", "gaussian"):
            raise ValueError(f"unknown filter shape {self.shape!r}")

    def center_nm(self, role: str) -> float:
        return {ROLE_SIGNAL: self.signal_center_nm, ROLE_IDLER: self.idler_center_nm}[role]

    def bandwidth_hz(self) -> float:
        # d(nu) = c dlambda / lambda^2 at the mean channel wavelength
        lam = 0.5 * (self.signal_center_nm + self.idler_center_nm) * 1e-9
        return fwm.SPEED_OF_LIGHT * self.bandwidth_nm * 1e-9 / lam**2

    def check_symmetry(self, pump_wavelength_nm: float, tol_nm: float = 0.1) -> bool:
        """Signal and idler channels should straddle the pump (energy
        conservation); returns False when off by more than ``tol_nm``."""
        mean = 0.5 * (self.signal_center_nm + self.idler_center_nm)
        return abs(mean - pump_wavelength_nm) <= tol_nm + 1e-9


@dataclass(frozen=True)
class PumpStage:
    """Pump state after one element.

    Powers are tracked per polarization and mixed incoherently by
    rotations: after millimetres of strongly birefringent waveguide the
    TE/TM pump components have walked off by several picoseconds, so their
    relative phase is scrambled and interference terms average out.  The
    ``jones`` field is a representative unit vector (component magnitudes
    only, no relative phase).
    """

    element: str
    power_te_mw: float
    power_tm_mw: float

    @property
    def power_mw(self) -> float:
        return self.power_te_mw + self.power_tm_mw

    @property
    def jones(self) -> np.ndarray:
        total = self.power_mw
        if total <= 0.0:
            return np.array([0.0, 0.0], dtype=complex)
        return np.sqrt(np.array([self.power_te_mw, self.power_tm_mw]) / total).astype(complex)


def _rotate_powers(p_te: float, p_tm: float, theta_deg: float) -> tuple[float, float]:
    c2 = np.cos(np.deg2rad(theta_deg)) ** 2
    s2 = np.sin(np.deg2rad(theta_deg)) ** 2
    return c2 * p_te + s2 * p_tm, s2 * p_te + c2 * p_tm


def propagate_pump(layout: ChipLayout, pump: PumpField) -> list[PumpStage]:
    """Track the pump's per-polarization power through every element.

    ``peak_power_mw`` is the power arriving at the input facet; each
    element applies its loss and rotation.  Total power never increases.
    """
    p_te = pump.peak_power_mw * float(abs(pump.polarization[0]) ** 2)
    p_tm = pump.peak_power_mw * float(abs(pump.polarization[1]) ** 2)
    stages = [PumpStage("input", p_te, p_tm)]

    mu_in = db_to_transmittance(layout.input_ssc.coupling_loss_db)
    p_te, p_tm = _rotate_powers(p_te, p_tm, layout.input_ssc.rotation_pump_deg)
    p_te, p_tm = mu_in * p_te, mu_in * p_tm
    stages.append(PumpStage("input_ssc", p_te, p_tm))

    p_te *= layout.sww1.transmittance("TE")
    p_tm *= layout.sww1.transmittance("TM")
    stages.append(PumpStage("sww1", p_te, p_tm))

    theta_p = layout.spr.theta_deg(pump.wavelength_nm, pump.wavelength_nm)
    p_te, p_tm = _rotate_powers(p_te, p_tm, theta_p)
    mu_spr = layout.spr.transmittance
    p_te, p_tm = mu_spr * p_te, mu_spr * p_tm
    stages.append(PumpStage("spr", p_te, p_tm))

    p_te *= layout.sww2.transmittance("TE")
    p_tm *= layout.sww2.transmittance("TM")
    stages.append(PumpStage("sww2", p_te, p_tm))

    mu_out = db_to_transmittance(layout.output_ssc.coupling_loss_db)
    p_te, p_tm = _rotate_powers(p_te, p_tm, layout.output_ssc.rotation_pump_deg)
    p_te, p_tm = mu_out * p_te, mu_out * p_tm
    stages.append(PumpStage("output_ssc", p_te, p_tm))
    return stages


@dataclass(frozen=True)
class BiphotonWeights:
    """Relative pair rates of the two generation paths.

    ``w_tm`` is the SWW1 path (pairs leave through the rotator, nominally
    as TM,TM); ``w_te`` is the SWW2 path (pairs leave as TE,TE).  Values
    are proportional to pairs per pulse; only ratios are meaningful until
    multiplied by a chip-end calibration constant.
    """

    w_te: float
    w_tm: float
    phi_rad: float
    degenerate: bool

    def normalized(self) -> tuple[float, float]:
        total = self.w_te + self.w_tm
        if total <= 0.0:
            raise DegenerateStateError("both pair-generation weights are zero")
        return self.w_te / total, self.w_tm / total


def biphoton_weights(layout: ChipLayout, pump: PumpField) -> BiphotonWeights:
    """Pair rates of the two generation paths, in (gamma P L)^2 units.

    Pair generation is quadratic in the local TE pump power (chi^(3));
    the SWW1-path pairs then carry the SPR + SWW2 transmittance squared
    (one factor per photon).
    """
    stages = {s.element: s for s in propagate_pump(layout, pump)}

    # SWW1 path: pumped by the TE power at the SWW1 input.
    rate_1 = fwm.fwm_efficiency(layout.sww1.gamma_per_w_m,
                                stages["input_ssc"].power_te_mw,
                                layout.sww1.effective_length_mm("TE"))
    pair_survival = (layout.spr.transmittance * layout.sww2.transmittance("TM")) ** 2
    w_tm = rate_1 * pair_survival

    # SWW2 path: pumped by whatever TE power survives SWW1 + SPR.
    w_te = fwm.fwm_efficiency(layout.sww2.gamma_per_w_m,
                              stages["spr"].power_te_mw,
                              layout.sww2.effective_length_mm("TE"))

    degenerate = (w_te + w_tm) <= 0.0
    return BiphotonWeights(w_te=w_te, w_tm=w_tm,
                           phi_rad=layout.phase_rad(pump.wavelength_nm),
                           degenerate=degenerate)


def coherence_factor(delay_ps: float, filt: FilterSpec) -> float:
    """Spectral-average coherence surviving a birefringent delay seen
    through the filter window; 1 at zero bandwidth-delay product."""
    b_tau = filt.bandwidth_hz() * abs(delay_ps) * 1e-12
    if filt.shape == "rectangular":
        return float(abs(np.sinc(b_tau)))  # np.sinc(x) = sin(pi x)/(pi x)
    sigma = filt.bandwidth_hz() / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    return float(np.exp(-2.0 * (np.pi * sigma * abs(delay_ps) * 1e-12) ** 2))


def dephasing_factor(pmd_ps_per_mm: float, length_mm: float, filt: FilterSpec) -> float:
    """Coherence factor for the delay accumulated over ``length_mm`` of
    waveguide with the given polarization-mode dispersion."""
    if pmd_ps_per_mm < 0 or length_mm < 0:
        raise ValueError("pmd and length must be non-negative")
    return coherence_factor(pmd_ps_per_mm * length_mm, filt)


def _dephase_per_photon(rho: np.ndarray, d_signal: float, d_idler: float) -> np.ndarray:
    """Phase damping in the TE/TM basis applied to each photon: an element
    loses one factor per photon whose polarization differs bra vs ket."""
    pol = np.array([0, 0, 1, 1])  # signal polarization per basis index
    pil = np.array([0, 1, 0, 1])  # idler polarization per basis index
    fs = np.where(pol[:, None] != pol[None, :], d_signal, 1.0)
    fi = np.where(pil[:, None] != pil[None, :], d_idler, 1.0)
    return rho * fs * fi


def output_state(layout: ChipLayout, pump: PumpField, filt: FilterSpec) -> np.ndarray:
    """Two-photon polarization density matrix emitted by the chip.

    Coherent superposition of the two generation paths with the weights
    and phase from :func:`biphoton_weights`; the SWW1-path pairs carry the
    (wavelength-dependent) SPR rotation, the whole state the output-SSC
    rotations; TE/TM coherences are damped by the filter-window factor.
    """
    weights = biphoton_weights(layout, pump)
    if weights.degenerate:
        raise DegenerateStateError("no pair generation: check pump power/polarization")

    theta_s = layout.spr.theta_deg(filt.signal_center_nm, pump.wavelength_nm)
    theta_i = layout.spr.theta_deg(filt.idler_center_nm, pump.wavelength_nm)
    branch_sww1 = tensor(rotator_matrix(theta_s) @ TE, rotator_matrix(theta_i) @ TE)
    branch_sww2 = tensor(TE, TE)

    psi = (np.sqrt(weights.w_te) * branch_sww2
           + np.exp(-1j * weights.phi_rad) * np.sqrt(weights.w_tm) * branch_sww1)
    psi = psi / np.linalg.norm(psi)
    rho = state_to_density(psi)

    delay = layout.effective_dephasing_delay_ps()
    rho = _dephase_per_photon(rho,
                              coherence_factor(delay, filt),
                              coherence_factor(delay, filt))

    us = rotator_matrix(layout.output_ssc.rotation_signal_deg)
    ui = rotator_matrix(layout.output_ssc.rotation_idler_deg)
    u4 = tensor(us, ui)
    return validate_density_matrix(u4 @ rho @ u4.conj().T)


@dataclass(frozen=True)
class FringeFit:
    theta_out_deg: float
    visibility: float
    amplitude: float
    background: float


@dataclass(frozen=True)
class FringeScan:
    angles_deg: np.ndarray
    transmittance: np.ndarray
    fit: FringeFit


def _role_for_wavelength(wavelength_nm: float, pump_wavelength_nm: float,
                         filt: FilterSpec | None) -> str:
    candidates = {ROLE_PUMP: pump_wavelength_nm}
    if filt is not None:
        candidates[ROLE_SIGNAL] = filt.signal_center_nm
        candidates[ROLE_IDLER] = filt.idler_center_nm
    return min(candidates, key=lambda r: abs(candidates[r] - wavelength_nm))


def fringe_scan(layout: ChipLayout, input_pol: np.ndarray, analyzer_angles_deg,
                wavelength_nm: float, *, pump_wavelength_nm: float,
                filt: FilterSpec | None = None,
                apply_filter_dephasing: bool = False,
                background: float = 0.0) -> FringeScan:
    """Classical transmission through the chip versus output polarizer
    angle, with a Malus-law fit T = B + A cos^2(theta - theta_out).

    ``background`` is the unpolarized floor of the measurement (stray
    light / polarizer extinction), as a fraction of the output power; it
    lowers the visibility without pulling the fitted angle.  A filter is
    used to match the wavelength to the signal/idler channel; set
    ``apply_filter_dephasing`` to additionally damp the single-photon
    TE/TM coherence by the in-window averaging factor.
    """
    angles = np.asarray(analyzer_angles_deg, dtype=float)
    if angles.size < 2:
        raise ValueError("need at least 2 analyzer angles")
    if not 0.0 <= background < 1.0:
        raise ValueError("background must be in [0, 1)")

    role = _role_for_wavelength(wavelength_nm, pump_wavelength_nm, filt)
    j = np.sqrt(db_to_transmittance(layout.input_ssc.coupling_loss_db)) * (
        rotator_matrix(layout.input_ssc.rotation_deg(role)) @ np.asarray(input_pol, complex))
    j = np.diag([np.sqrt(layout.sww1.transmittance("TE")),
                 np.sqrt(layout.sww1.transmittance("TM"))]) @ j
    theta = layout.spr.theta_deg(wavelength_nm, pump_wavelength_nm)
    j = np.sqrt(layout.spr.transmittance) * (rotator_matrix(theta) @ j)
    j = np.diag([np.sqrt(layout.sww2.transmittance("TE")),
                 np.sqrt(layout.sww2.transmittance("TM"))]) @ j
    j = np.sqrt(db_to_transmittance(layout.output_ssc.coupling_loss_db)) * (
        rotator_matrix(layout.output_ssc.rotation_deg(role)) @ j)

    rho1 = np.outer(j, j.conj())
    if apply_filter_dephasing and filt is not None:
        d = coherence_factor(layout.effective_dephasing_delay_ps(), filt)
        rho1 = rho1 * np.array([[1.0, d], [d, 1.0]])
    power = float(np.trace(rho1).real)
    rho1 = (1.0 - background) * rho1 + background * power * np.eye(2) / 2.0

    rad = np.deg2rad(angles)
    analyzers = np.stack([np.cos(rad), np.sin(rad)], axis=1)
    trans = np.einsum("na,ab,nb->n", analyzers.conj(), rho1, analyzers).real

    # T = c0 + c1 cos(2 theta) + c2 sin(2 theta) is the same model as
    # B + A cos^2(theta - theta0); solve by linear least squares.
    design = np.stack([np.ones_like(rad), np.cos(2 * rad), np.sin(2 * rad)], axis=1)
    c0, c1, c2 = np.linalg.lstsq(design, trans, rcond=None)[0]
    amplitude = 2.0 * np.hypot(c1, c2)
    offset = c0 - amplitude / 2.0
    theta_out = np.rad2deg(0.5 * np.arctan2(c2, c1))
    t_max, t_min = offset + amplitude, offset
    vis = (t_max - t_min) / (t_max + t_min) if (t_max + t_min) > 0 else 0.0
    fit = FringeFit(theta_out_deg=float(theta_out), visibility=float(vis),
                    amplitude=float(amplitude), background=float(offset))
    return FringeScan(angles_deg=angles, transmittance=trans, fit=fit)


def walk_off(delta_l_um: float, pmd_ps_per_mm: float) -> float:
    """Biphoton wave-packet walk-off |delta L| x PMD, in femtoseconds."""
    if pmd_ps_per_mm < 0:
        raise ValueError("pmd must be non-negative")
    return abs(delta_l_um) * 1e-3 * pmd_ps_per_mm * 1e3
