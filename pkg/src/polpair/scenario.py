"""Scenario configuration: YAML schema, validation, bundled presets.

A scenario gathers everything one run needs: chip layout, pump, filter,
detectors, channels, the pair-rate calibration, tomography options and
the sampling seed.  Unknown keys are rejected so typos cannot silently
fall back to defaults.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .detection import ChannelSpec, DetectorSpec
from .device import ChipLayout, FilterSpec, PumpField, SprSpec, SscSpec, SwwSpec
from .fwm import NonlinearWaveguide
from .polarization import jones
from .tomography import MleOptions

SCHEMA_VERSION = 1
PRESET_NAMES = ("ideal", "paper-repro-ent", "paper-repro-ref")


class ConfigError(ValueError):
    """Scenario file fails to parse or validate."""


@dataclass(frozen=True)
class PairSource:
    """Chip-end pair rate: an explicit pairs-per-pulse value, or derived
    from the normalized creation efficiency (pairs/pulse/GHz/W^2/cm^2)."""

    mode: str
    pairs_per_pulse: float | None = None
    normalized_eff: float | None = None

    def __post_init__(self):
        if self.mode == "explicit":
            if self.pairs_per_pulse is None or self.pairs_per_pulse < 0:
                raise ConfigError("explicit pair source needs pairs_per_pulse >= 0")
        elif self.mode == "fwm":
            if self.normalized_eff is None or self.normalized_eff <= 0:
                raise ConfigError("fwm pair source needs normalized_eff > 0")
        else:
            raise ConfigError(f"unknown pair source mode {self.mode!r}")


@dataclass(frozen=True)
class Scenario:
    layout: ChipLayout
    pump: PumpField
    filter: FilterSpec
    detector_s: DetectorSpec
    detector_i: DetectorSpec
    channel_s: ChannelSpec
    channel_i: ChannelSpec
    pair_source: PairSource
    tomography: MleOptions
    projector_set_name: str
    nonlinear: NonlinearWaveguide
    duration_s: float
    seed: int | None
    fringe_background: float
    config_hash: str
    name: str

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("this command samples counts: the scenario must set a seed")
        return self.seed

    def pairs_per_pulse(self) -> float:
        from .device import biphoton_weights

        if self.pair_source.mode == "explicit":
            return float(self.pair_source.pairs_per_pulse)
        w = biphoton_weights(self.layout, self.pump)
        gamma = self.layout.sww1.gamma_per_w_m
        bandwidth_ghz = self.filter.bandwidth_hz() / 1e9
        # w is in (gamma P L)^2 = (gamma [1/(W m)] x P [W] x L [m])^2 units;
        # the normalized efficiency wants (P [W] x L [cm])^2.
        return float(self.pair_source.normalized_eff * bandwidth_ghz
                     * (w.w_te + w.w_tm) / gamma**2 * 1e4)


def _require_mapping(obj, context: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{context}: expected a mapping, got {type(obj).__name__}")
    return obj


def _take(raw: dict, context: str, required: dict, optional: dict | None = None) -> dict:
    """Pull typed keys out of a mapping, rejecting unknown ones."""
    optional = optional or {}
    unknown = set(raw) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(raw)
    if missing:
        raise ConfigError(f"{context}: missing keys {sorted(missing)}")
    out = {}
    for key, cast in required.items():
        out[key] = _cast(raw[key], cast, f"{context}.{key}")
    for key, cast in optional.items():
        if key in raw and raw[key] is not None:
            out[key] = _cast(raw[key], cast, f"{context}.{key}")
    return out


def _cast(value, cast, context: str):
    try:
        return cast(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{context}: {exc}") from exc


def _parse_ssc(raw, context) -> SscSpec:
    kw = _take(_require_mapping(raw, context), context, {}, {
        "rotation_pump_deg": float, "rotation_signal_deg": float,
        "rotation_idler_deg": float, "coupling_loss_db": float,
    })
    return SscSpec(**kw)


def _parse_sww(raw, context) -> SwwSpec:
    kw = _take(_require_mapping(raw, context), context, {
        "length_mm": float, "alpha_te_db_per_cm": float, "alpha_tm_db_per_cm": float,
        "pmd_ps_per_mm": float, "gamma_per_w_m": float,
    })
    return SwwSpec(**kw)


def _parse_layout(raw, context) -> ChipLayout:
    fields = _take(_require_mapping(raw, context), context, {
        "input_ssc": dict, "sww1": dict, "spr": dict, "sww2": dict, "output_ssc": dict,
    }, {
        "delta_l_um": float, "phi_rad": float, "phase_index": float,
        "dephasing_delay_ps": float,
    })
    spr_kw = _take(fields["spr"], f"{context}.spr", {"theta_deg_at_pump": float}, {
        "dispersion_deg_per_nm": float, "insertion_loss_db": float,
    })
    extras = {k: fields[k] for k in
              ("delta_l_um", "phi_rad", "phase_index", "dephasing_delay_ps") if k in fields}
    return ChipLayout(
        input_ssc=_parse_ssc(fields["input_ssc"], f"{context}.input_ssc"),
        sww1=_parse_sww(fields["sww1"], f"{context}.sww1"),
        spr=SprSpec(**spr_kw),
        sww2=_parse_sww(fields["sww2"], f"{context}.sww2"),
        output_ssc=_parse_ssc(fields["output_ssc"], f"{context}.output_ssc"),
        **extras,
    )


def _parse_pump(raw, context) -> PumpField:
    kw = _take(_require_mapping(raw, context), context, {
        "wavelength_nm": float, "peak_power_mw": float, "pulse_width_ps": float,
        "rep_rate_mhz": float, "polarization_angle_deg": float,
    }, {"polarization_phase_deg": float})
    pol = jones(kw.pop("polarization_angle_deg"), kw.pop("polarization_phase_deg", 0.0))
    return PumpField(polarization=pol, **kw)


def _parse_filter(raw, context) -> FilterSpec:
    kw = _take(_require_mapping(raw, context), context, {
        "signal_center_nm": float, "idler_center_nm": float, "bandwidth_nm": float,
    }, {"shape": str})
    return FilterSpec(**kw)


def _parse_detector(raw, context) -> DetectorSpec:
    kw = _take(_require_mapping(raw, context), context, {
        "quantum_eff": float, "gate_width_ns": float, "dark_per_gate": float,
        "dead_time_us": float, "gate_rate_mhz": float,
    })
    return DetectorSpec(**kw)


def _parse_channel(raw, context) -> ChannelSpec:
    kw = _take(_require_mapping(raw, context), context, {"collection_loss_db": float},
               {"noise_singles_per_gate": float})
    return ChannelSpec(**kw)


def _parse_pair_source(raw, context) -> PairSource:
    kw = _take(_require_mapping(raw, context), context, {"mode": str},
               {"pairs_per_pulse": float, "normalized_eff": float})
    return PairSource(**kw)


def _parse_tomography(raw, context) -> tuple[MleOptions, str]:
    kw = _take(_require_mapping(raw, context), context, {}, {
        "max_iterations": int, "convergence_tol": float, "init": str,
        "projector_set": str,
    })
    name = kw.pop("projector_set", "canonical")
    if name != "canonical":
        raise ConfigError(f"{context}: only the 'canonical' projector set is bundled")
    return MleOptions(**kw), name


def _parse_nonlinear(raw, context) -> NonlinearWaveguide:
    kw = _take(_require_mapping(raw, context), context, {
        "n2_m2_per_w": float, "aeff_te_um2": float, "aeff_tm_um2": float,
        "beta2_te_ps2_per_m": float, "beta2_tm_ps2_per_m": float, "length_mm": float,
    })
    return NonlinearWaveguide(**kw)


def parse_scenario(raw: dict, name: str = "<inline>") -> Scenario:
    raw = _require_mapping(raw, "scenario")
    fields = _take(raw, "scenario", {
        "schema_version": int, "layout": dict, "pump": dict, "filter": dict,
        "detectors": dict, "channels": dict, "pair_source": dict,
        "nonlinear_waveguide": dict, "duration_s": float,
    }, {"tomography": dict, "seed": int, "fringe_background": float})
    if fields["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {fields['schema_version']}"
                          f" (this tool reads version {SCHEMA_VERSION})")

    detectors = _take(fields["detectors"], "detectors", {"signal": dict, "idler": dict})
    channels = _take(fields["channels"], "channels", {"signal": dict, "idler": dict})
    mle_opts, pset_name = _parse_tomography(fields.get("tomography", {}), "tomography")

    if fields["duration_s"] <= 0:
        raise ConfigError("duration_s must be positive")
    background = fields.get("fringe_background", 0.0)
    if not 0.0 <= background < 1.0:
        raise ConfigError("fringe_background must be in [0, 1)")

    try:
        scenario = Scenario(
            layout=_parse_layout(fields["layout"], "layout"),
            pump=_parse_pump(fields["pump"], "pump"),
            filter=_parse_filter(fields["filter"], "filter"),
            detector_s=_parse_detector(detectors["signal"], "detectors.signal"),
            detector_i=_parse_detector(detectors["idler"], "detectors.idler"),
            channel_s=_parse_channel(channels["signal"], "channels.signal"),
            channel_i=_parse_channel(channels["idler"], "channels.idler"),
            pair_source=_parse_pair_source(fields["pair_source"], "pair_source"),
            tomography=mle_opts,
            projector_set_name=pset_name,
            nonlinear=_parse_nonlinear(fields["nonlinear_waveguide"], "nonlinear_waveguide"),
            duration_s=fields["duration_s"],
            seed=fields.get("seed"),
            fringe_background=background,
            config_hash=_hash_config(raw),
            name=name,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    if not scenario.filter.check_symmetry(scenario.pump.wavelength_nm):
        import warnings

        warnings.warn("filter channels are not symmetric about the pump wavelength",
                      stacklevel=2)
    return scenario


def _hash_config(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, default=float)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def load_scenario(source: str | Path) -> Scenario:
    """Load a scenario from a YAML file path or a bundled preset name."""
    if isinstance(source, str) and source in PRESET_NAMES:
        text = resources.files("polpair.presets").joinpath(f"{source}.yaml").read_text()
        name = source
    else:
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"scenario file not found: {path}")
        text = path.read_text()
        name = str(path)
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {name}: {exc}") from exc
    return parse_scenario(raw, name=name)


def list_presets() -> tuple[str, ...]:
    return PRESET_NAMES


def provenance(scenario: Scenario, seed: int | None = None) -> dict:
    from . import __version__

    return {
        "tool": "polpair",
        "tool_version": __version__,
        "config": scenario.name,
        "config_sha256": scenario.config_hash,
        "seed": scenario.seed if seed is None else seed,
    }


def set_seed(scenario: Scenario, seed: int | None) -> Scenario:
    """Scenario with the seed overridden (CLI --seed beats the file)."""
    if seed is None:
        return scenario
    from dataclasses import replace

    return replace(scenario, seed=seed)
