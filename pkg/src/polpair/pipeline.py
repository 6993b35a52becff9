"""End-to-end runs: emitted state, simulated counting experiments,
reconstruction, spectra, fringes and parameter sweeps over scenarios."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import detection, device, fwm, metrics, tomography
from .detection import CountRecord, ExpectedRates
from .scenario import ConfigError, Scenario


def emitted_state(scenario: Scenario) -> np.ndarray:
    return device.output_state(scenario.layout, scenario.pump, scenario.filter)


def state_metrics(scenario: Scenario) -> tuple[np.ndarray, metrics.MetricReport]:
    rho = emitted_state(scenario)
    return rho, metrics.build_report(rho)


def setting_rates(scenario: Scenario, rho: np.ndarray,
                  setting: detection.ProjectionSetting) -> ExpectedRates:
    return detection.expected_rates(
        scenario.pairs_per_pulse(),
        detection.projection_probability(rho, setting),
        scenario.channel_s, scenario.channel_i,
        scenario.detector_s, scenario.detector_i,
        marginal_s=detection.marginal_probability(rho, setting, "signal"),
        marginal_i=detection.marginal_probability(rho, setting, "idler"),
    )


def simulate_counts(scenario: Scenario, seed: int | None = None) -> list[CountRecord]:
    """One CountRecord per projection setting of the scenario's set.

    Per-setting RNG streams are derived from (seed, label), so records are
    independent of evaluation order and reproducible per label.
    """
    seed = scenario.require_seed() if seed is None else seed
    rho, _ = state_metrics(scenario)
    pset = tomography.default_projector_set()
    return [
        detection.sample_counts(setting_rates(scenario, rho, s),
                                scenario.duration_s, seed, label=s.label)
        for s in pset.settings
    ]


def records_in_set_order(records: list[CountRecord],
                         pset: tomography.ProjectorSet) -> list[CountRecord]:
    by_label = {}
    for rec in records:
        if rec.label in by_label:
            raise ConfigError(f"duplicate count record for setting {rec.label!r}")
        by_label[rec.label] = rec
    missing = [lbl for lbl in pset.labels() if lbl not in by_label]
    if missing:
        raise ConfigError(f"count records missing settings {missing}")
    return [by_label[lbl] for lbl in pset.labels()]


@dataclass(frozen=True)
class TomographyRun:
    rho: np.ndarray
    mle: tomography.MleResult
    linear: tomography.LinearInversion
    report: metrics.MetricReport
    clipped: list[str]
    bootstrap: tomography.BootstrapReport | None


def run_tomography(records: list[CountRecord], scenario: Scenario, *,
                   subtract_accidentals: bool = False, n_bootstrap: int = 0,
                   seed: int | None = None) -> TomographyRun:
    pset = tomography.default_projector_set()
    records = records_in_set_order(records, pset)
    clipped: list[str] = []
    if subtract_accidentals:
        records, clipped = tomography.subtract_accidentals(records)
    linear = tomography.linear_reconstruct(records, pset)
    mle = tomography.mle_reconstruct(records, pset, scenario.tomography)
    boot = None
    if n_bootstrap > 0:
        boot_seed = scenario.require_seed() if seed is None else seed
        boot = tomography.error_bars(records, pset, scenario.tomography,
                                     n_bootstrap, boot_seed)
    return TomographyRun(rho=mle.rho, mle=mle, linear=linear,
                         report=metrics.build_report(mle.rho),
                         clipped=clipped, bootstrap=boot)


def fwm_spectrum_rows(scenario: Scenario, detunings_nm) -> list[dict]:
    """Conversion-efficiency spectra for both modes, with dB values
    relative to the TE zero-detuning peak."""
    wg = scenario.nonlinear
    lam = scenario.pump.wavelength_nm
    power = scenario.pump.peak_power_mw
    te_peak = fwm.fwm_efficiency(wg.gamma(lam, "TE"), power, wg.length_mm)
    rows = []
    for mode in ("TE", "TM"):
        eta = fwm.conversion_spectrum(wg, lam, power, detunings_nm, mode)
        for d, e in zip(detunings_nm, eta):
            db = 10.0 * np.log10(e / te_peak) if e > 0 else float("-inf")
            rows.append({"mode": mode, "detuning_nm": float(d), "eta": float(e),
                         "eta_db_rel_te_peak": float(db)})
    return rows


def fringe(scenario: Scenario, wavelength_nm: float, angles_deg,
           input_angle_deg: float = 0.0) -> device.FringeScan:
    """Polarizer fringe through the scenario's chip at one wavelength."""
    from .polarization import jones

    return device.fringe_scan(
        scenario.layout, jones(input_angle_deg), angles_deg, wavelength_nm,
        pump_wavelength_nm=scenario.pump.wavelength_nm,
        filt=scenario.filter,
        background=scenario.fringe_background,
    )


def _replace_path(obj, parts: list[str], value):
    name = parts[0]
    if not dataclasses.is_dataclass(obj) or name not in {f.name for f in dataclasses.fields(obj)}:
        raise ConfigError(f"unknown sweep parameter field {name!r} on {type(obj).__name__}")
    if len(parts) == 1:
        return dataclasses.replace(obj, **{name: value})
    child = _replace_path(getattr(obj, name), parts[1:], value)
    return dataclasses.replace(obj, **{name: child})


def sweep(scenario: Scenario, param_path: str, values) -> list[dict]:
    """Re-evaluate the emitted-state metrics along one config axis.

    ``param_path`` is dotted, e.g. ``layout.spr.insertion_loss_db``.
    Returns long-format rows: parameter, value, metric, metric_value.
    """
    values = list(values)
    if not values:
        raise ConfigError("sweep needs a non-empty value list")
    rows = []
    for v in values:
        modified = _replace_path(scenario, param_path.split("."), v)
        _, report = state_metrics(modified)
        for key, val in report.to_json().items():
            rows.append({"parameter": param_path, "value": float(v),
                         "metric": key, "metric_value": float(val)})
    return rows
