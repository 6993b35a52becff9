"""Gated single-photon detection statistics: singles, coincidences,
accidentals, CAR, and seeded Monte Carlo count generation.

Counts follow independent Poisson statistics per gate; accidentals are
modeled as the same-gate product of uncorrelated singles, the standard
estimate for detectors gated at the pump repetition rate.
"""

from __future__ import annotations

import csv
import io
import zlib
from dataclasses import dataclass, asdict

import numpy as np

from .polarization import tensor

CSV_COLUMNS = ("label", "singles_s", "singles_i", "coincidences", "accidentals", "duration_s")


@dataclass(frozen=True)
class DetectorSpec:
    """Gated InGaAs single-photon detector."""

    quantum_eff: float
    gate_width_ns: float
    dark_per_gate: float
    dead_time_us: float
    gate_rate_mhz: float

    def __post_init__(self):
        if not 0.0 <= self.quantum_eff <= 1.0:
            raise ValueError("quantum_eff must be in [0, 1]")
        if not 0.0 <= self.dark_per_gate <= 1.0:
            raise ValueError("dark_per_gate must be in [0, 1]")
        for name in ("gate_width_ns", "dead_time_us", "gate_rate_mhz"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ChannelSpec:
    """Everything between chip facet and detector for one photon."""

    collection_loss_db: float
    noise_singles_per_gate: float = 0.0

    def __post_init__(self):
        if self.collection_loss_db < 0:
            raise ValueError("collection_loss_db must be >= 0")
        if not 0.0 <= self.noise_singles_per_gate < 1.0:
            raise ValueError("noise_singles_per_gate must be in [0, 1)")

    @property
    def transmittance(self) -> float:
        return 10.0 ** (-self.collection_loss_db / 10.0)


@dataclass(frozen=True)
class ProjectionSetting:
    """One two-photon polarization projection (e.g. 'DR')."""

    label: str
    projector_s: np.ndarray
    projector_i: np.ndarray

    def __post_init__(self):
        for name, v in (("projector_s", self.projector_s), ("projector_i", self.projector_i)):
            v = np.asarray(v, dtype=complex)
            if abs(np.linalg.norm(v) - 1.0) > 1e-9:
                raise ValueError(f"{name} must be unit norm")
            object.__setattr__(self, name, v)

    def ket(self) -> np.ndarray:
        return tensor(self.projector_s, self.projector_i)


@dataclass(frozen=True)
class CountRecord:
    label: str
    singles_s: int
    singles_i: int
    coincidences: int
    accidentals: int
    duration_s: float

    def __post_init__(self):
        for name in ("singles_s", "singles_i", "coincidences", "accidentals"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")


@dataclass(frozen=True)
class ExpectedRates:
    """Dead-time-corrected rates in Hz plus the underlying per-gate
    probabilities."""

    n_cc_hz: float
    n_acc_hz: float
    singles_s_hz: float
    singles_i_hz: float
    cc_per_gate: float
    acc_per_gate: float
    singles_s_per_gate: float
    singles_i_per_gate: float


def projection_probability(rho: np.ndarray, setting: ProjectionSetting) -> float:
    """p = <proj_s x proj_i| rho |proj_s x proj_i>, real in [0, 1]."""
    ket = setting.ket()
    p = float(np.real(ket.conj() @ np.asarray(rho) @ ket))
    if p < -1e-9 or p > 1.0 + 1e-9:
        raise ValueError(f"projection probability {p!r} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def marginal_probability(rho: np.ndarray, setting: ProjectionSetting, arm: str) -> float:
    """Probability that one photon alone passes its analyzer."""
    rho = np.asarray(rho)
    r = rho.reshape(2, 2, 2, 2)
    if arm == "signal":
        reduced = np.einsum("ikjk->ij", r)
        v = setting.projector_s
    elif arm == "idler":
        reduced = np.einsum("kikj->ij", r)
        v = setting.projector_i
    else:
        raise ValueError(f"unknown arm {arm!r}")
    return float(np.real(v.conj() @ reduced @ v))


def _dead_time_factor(rate_hz: float, dead_time_us: float) -> float:
    # non-paralyzable counter: R' = R / (1 + R tau)
    return 1.0 / (1.0 + rate_hz * dead_time_us * 1e-6)


def expected_rates(pair_per_pulse: float, p_proj: float,
                   ch_s: ChannelSpec, ch_i: ChannelSpec,
                   det_s: DetectorSpec, det_i: DetectorSpec, *,
                   marginal_s: float = 0.5, marginal_i: float = 0.5,
                   include_multipair: bool = False) -> ExpectedRates:
    """Coincidence, accidental and singles rates for one projection.

    Per gate: coincidences = pair x p_proj x eta_s x eta_i; singles =
    pair x marginal x eta + dark + noise; accidentals = singles product.
    Rates are per-gate values times the gate rate, each detector corrected
    by the non-paralyzable dead-time factor.
    """
    if pair_per_pulse < 0 or not 0.0 <= p_proj <= 1.0:
        raise ValueError("invalid pair_per_pulse or p_proj")
    if det_s.gate_rate_mhz != det_i.gate_rate_mhz:
        raise ValueError("detectors must share the synchronous gate rate")

    eta_s = ch_s.transmittance * det_s.quantum_eff
    eta_i = ch_i.transmittance * det_i.quantum_eff
    gate_hz = det_s.gate_rate_mhz * 1e6

    cc = pair_per_pulse * p_proj * eta_s * eta_i
    s_s = pair_per_pulse * marginal_s * eta_s + det_s.dark_per_gate + ch_s.noise_singles_per_gate
    s_i = pair_per_pulse * marginal_i * eta_i + det_i.dark_per_gate + ch_i.noise_singles_per_gate
    acc = s_s * s_i
    if include_multipair:
        # two independent pairs in the same gate masquerading as a coincidence
        cc += (pair_per_pulse * marginal_s * eta_s) * (pair_per_pulse * marginal_i * eta_i)

    f_s = _dead_time_factor(s_s * gate_hz, det_s.dead_time_us)
    f_i = _dead_time_factor(s_i * gate_hz, det_i.dead_time_us)
    return ExpectedRates(
        n_cc_hz=cc * gate_hz * f_s * f_i,
        n_acc_hz=acc * gate_hz * f_s * f_i,
        singles_s_hz=s_s * gate_hz * f_s,
        singles_i_hz=s_i * gate_hz * f_i,
        cc_per_gate=cc,
        acc_per_gate=acc,
        singles_s_per_gate=s_s,
        singles_i_per_gate=s_i,
    )


def car(record: CountRecord) -> float:
    """Coincidence-to-accidental ratio of a measured record."""
    if record.accidentals <= 0:
        raise ValueError("undefined CAR: zero accidental counts")
    return record.coincidences / record.accidentals


def car_of_rates(rates: ExpectedRates) -> float:
    """CAR implied by expected rates; measured coincidences include the
    accidental background."""
    if rates.n_acc_hz <= 0:
        raise ValueError("undefined CAR: zero accidental rate")
    return (rates.n_cc_hz + rates.n_acc_hz) / rates.n_acc_hz


def _stream_seed(seed: int, label: str) -> np.random.Generator:
    # deterministic per-setting stream: mix the label into the seed
    mixed = (int(seed) & 0xFFFFFFFF, zlib.crc32(label.encode("utf-8")))
    return np.random.default_rng(np.random.SeedSequence(mixed))


def sample_counts(rates: ExpectedRates, duration_s: float, seed: int,
                  label: str = "") -> CountRecord:
    """Independent Poisson draws for one projection setting.

    Identical (rates, duration, seed, label) give an identical record.
    Measured coincidences include the accidental contribution; the
    accidental column is an independent estimate of that background.
    """
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    rng = _stream_seed(seed, label)
    draw = lambda hz: int(rng.poisson(hz * duration_s))
    return CountRecord(
        label=label,
        singles_s=draw(rates.singles_s_hz),
        singles_i=draw(rates.singles_i_hz),
        coincidences=draw(rates.n_cc_hz + rates.n_acc_hz),
        accidentals=draw(rates.n_acc_hz),
        duration_s=duration_s,
    )


def calibrate_noise_singles(target_car: float, pair_per_pulse: float,
                            channels: tuple[ChannelSpec, ChannelSpec],
                            detectors: tuple[DetectorSpec, DetectorSpec], *,
                            p_proj: float = 1.0, marginal: float = 1.0,
                            rel_tol: float = 1e-3) -> float:
    """Uncorrelated noise-singles level (per gate, both channels) that
    reproduces ``target_car`` in the co-polarized measurement.

    CAR decreases monotonically with added noise, so a bisection suffices.
    Raises if the target exceeds the zero-noise CAR.
    """
    ch_s, ch_i = channels

    def car_at(noise: float) -> float:
        chs = ChannelSpec(ch_s.collection_loss_db, noise)
        chi = ChannelSpec(ch_i.collection_loss_db, noise)
        return car_of_rates(expected_rates(pair_per_pulse, p_proj, chs, chi,
                                           *detectors,
                                           marginal_s=marginal, marginal_i=marginal))

    car_max = car_at(0.0)
    if target_car > car_max:
        raise ValueError(f"target CAR {target_car} exceeds zero-noise CAR {car_max:.1f}")
    lo, hi = 0.0, 1e-3
    while car_at(hi) > target_car:
        hi *= 2.0
        if hi > 0.5:
            raise ValueError("target CAR unreachable within physical noise levels")
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if car_at(mid) > target_car:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def records_to_csv(records: list[CountRecord], header_comments: list[str] | None = None) -> str:
    """Serialize records to the CSV wire format (comment lines allowed
    before the header, prefixed with '#')."""
    buf = io.StringIO()
    for line in header_comments or []:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        d = asdict(rec)
        writer.writerow([d[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def records_from_csv(text: str) -> list[CountRecord]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
        raise ValueError(f"expected CSV columns {CSV_COLUMNS}, got {reader.fieldnames}")
    records = []
    for row in reader:
        try:
            records.append(CountRecord(
                label=row["label"],
                singles_s=int(row["singles_s"]),
                singles_i=int(row["singles_i"]),
                coincidences=int(row["coincidences"]),
                accidentals=int(row["accidentals"]),
                duration_s=float(row["duration_s"]),
            ))
        except (TypeError, ValueError, KeyError) as exc:
            raise ValueError(f"malformed count record {row!r}") from exc
    return records
