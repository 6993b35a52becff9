"""Command-line front end.

Verbs: state | counts | tomo | fwm | fringe | sweep.  Every output file
carries a provenance block (config hash, seed, tool version); re-running
with the same config and seed reproduces byte-identical files.

Exit codes: 0 success, 2 config error, 3 numerical non-convergence,
4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .detection import records_from_csv, records_to_csv
from .polarization import density_matrix_to_json
from .scenario import ConfigError, list_presets, load_scenario, provenance, set_seed
from .tomography import NonConvergenceError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_IO = 4


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"wrote {path}")


def _json_dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _provenance_comments(prov: dict) -> list[str]:
    return [f"provenance: {json.dumps(prov, sort_keys=True)}"]


def _rows_to_csv(rows: list[dict], columns: list[str], prov: dict) -> str:
    buf = io.StringIO()
    for line in _provenance_comments(prov):
        buf.write(f"# {line}\n")
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _metrics_payload(report, prov: dict) -> dict:
    return {"metrics": report.to_json(), "provenance": prov}


def cmd_state(args) -> int:
    scenario = set_seed(load_scenario(args.config), args.seed)
    rho, report = pipeline.state_metrics(scenario)
    prov = provenance(scenario)
    out = Path(args.out)
    payload = density_matrix_to_json(rho)
    payload["provenance"] = prov
    _write_text(out / "state.json", _json_dumps(payload))
    if args.format == "csv":
        rows = [{"metric": k, "value": v} for k, v in report.to_json().items()]
        _write_text(out / "metrics.csv", _rows_to_csv(rows, ["metric", "value"], prov))
    else:
        _write_text(out / "metrics.json", _json_dumps(_metrics_payload(report, prov)))
    print(f"fully entangled fraction: {report.fully_entangled_fraction:.4f}  "
          f"concurrence: {report.concurrence:.4f}  purity: {report.purity:.4f}")
    return EXIT_OK


def cmd_counts(args) -> int:
    scenario = set_seed(load_scenario(args.config), args.seed)
    seed = scenario.require_seed()
    records = pipeline.simulate_counts(scenario)
    prov = provenance(scenario, seed)
    text = records_to_csv(records, header_comments=_provenance_comments(prov))
    _write_text(Path(args.out) / "counts.csv", text)
    total = sum(r.coincidences for r in records)
    print(f"16 settings x {scenario.duration_s:.0f} s, total coincidences {total}")
    return EXIT_OK


def cmd_tomo(args) -> int:
    scenario = set_seed(load_scenario(args.config), args.seed)
    try:
        records = records_from_csv(Path(args.counts).read_text())
    except OSError as exc:
        raise OSError(f"cannot read counts file: {exc}") from exc
    except ValueError as exc:
        raise OSError(f"malformed counts CSV: {exc}") from exc
    run = pipeline.run_tomography(records, scenario,
                                  subtract_accidentals=args.subtract_accidentals,
                                  n_bootstrap=args.bootstrap)
    prov = provenance(scenario)
    out = Path(args.out)
    payload = density_matrix_to_json(run.rho)
    payload["provenance"] = prov
    _write_text(out / "rho_mle.json", _json_dumps(payload))
    fit_report = {
        "loglik": run.mle.loglik,
        "iterations": run.mle.iterations,
        "clipped": run.clipped,
        "condition_number": run.mle.condition_number,
        "linear_min_eigenvalue": run.linear.min_eigenvalue,
        "subtract_accidentals": bool(args.subtract_accidentals),
        "provenance": prov,
    }
    if run.bootstrap is not None:
        fit_report["error_bars"] = run.bootstrap.to_json()
    _write_text(out / "fit_report.json", _json_dumps(fit_report))
    _write_text(out / "metrics.json", _json_dumps(_metrics_payload(run.report, prov)))
    print(f"fully entangled fraction: {run.report.fully_entangled_fraction:.4f}  "
          f"concurrence: {run.report.concurrence:.4f}")
    return EXIT_OK


def cmd_fwm(args) -> int:
    scenario = set_seed(load_scenario(args.config), args.seed)
    detunings = np.linspace(args.detuning_min, args.detuning_max, args.detuning_steps)
    rows = pipeline.fwm_spectrum_rows(scenario, detunings)
    prov = provenance(scenario)
    text = _rows_to_csv(rows, ["mode", "detuning_nm", "eta", "eta_db_rel_te_peak"], prov)
    _write_text(Path(args.out) / "fwm_spectrum.csv", text)
    return EXIT_OK


def cmd_fringe(args) -> int:
    scenario = set_seed(load_scenario(args.config), args.seed)
    angles = np.linspace(args.angle_min, args.angle_max, args.angle_steps)
    scan = pipeline.fringe(scenario, args.wavelength_nm, angles,
                           input_angle_deg=args.input_angle)
    prov = provenance(scenario)
    rows = [{"angle_deg": f"{a:.6f}", "transmittance": f"{t:.9e}"}
            for a, t in zip(scan.angles_deg, scan.transmittance)]
    out = Path(args.out)
    _write_text(out / "fringe.csv", _rows_to_csv(rows, ["angle_deg", "transmittance"], prov))
    fit = {
        "theta_out_deg": scan.fit.theta_out_deg,
        "visibility": scan.fit.visibility,
        "amplitude": scan.fit.amplitude,
        "background": scan.fit.background,
        "wavelength_nm": args.wavelength_nm,
        "provenance": prov,
    }
    _write_text(out / "fringe_fit.json", _json_dumps(fit))
    print(f"theta_out = {scan.fit.theta_out_deg:.2f} deg, V = {scan.fit.visibility:.3f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = set_seed(load_scenario(args.config), args.seed)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --values list: {exc}") from exc
    rows = pipeline.sweep(scenario, args.param, values)
    prov = provenance(scenario)
    text = _rows_to_csv(rows, ["parameter", "value", "metric", "metric_value"], prov)
    _write_text(Path(args.out) / "sweep.csv", text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polpair",
        description="On-chip polarization-entangled pair source: simulate, "
                    "count, reconstruct, characterize.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True,
                       help=f"scenario YAML path or preset name {list_presets()}")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("state", help="emitted density matrix and metrics")
    common(p)
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("counts", help="simulate counts for all 16 settings")
    common(p)
    p.set_defaults(func=cmd_counts)

    p = sub.add_parser("tomo", help="reconstruct a state from a counts CSV")
    common(p)
    p.add_argument("--counts", required=True, help="counts CSV path")
    p.add_argument("--subtract-accidentals", action="store_true")
    p.add_argument("--bootstrap", type=int, default=0,
                   help="bootstrap replicas for error bars (0 = off)")
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("fwm", help="TE/TM conversion-efficiency spectrum")
    common(p)
    p.add_argument("--detuning-min", type=float, default=-20.0)
    p.add_argument("--detuning-max", type=float, default=20.0)
    p.add_argument("--detuning-steps", type=int, default=81)
    p.set_defaults(func=cmd_fwm)

    p = sub.add_parser("fringe", help="polarizer fringe at one wavelength")
    common(p)
    p.add_argument("--wavelength-nm", type=float, required=True)
    p.add_argument("--input-angle", type=float, default=0.0,
                   help="input polarization angle from TE, degrees")
    p.add_argument("--angle-min", type=float, default=-90.0)
    p.add_argument("--angle-max", type=float, default=90.0)
    p.add_argument("--angle-steps", type=int, default=73)
    p.set_defaults(func=cmd_fringe)

    p = sub.add_parser("sweep", help="metric sweep along one config axis")
    common(p)
    p.add_argument("--param", required=True,
                   help="dotted config path, e.g. layout.spr.insertion_loss_db")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
