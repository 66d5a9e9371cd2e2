"""Batch command-line front end.

Subcommands: simulate, tomography, compile, grape, experiment
{rabi|t1|t2|pps}, algorithm {deutsch|grover4|bv|count|bell|qho|dqc1|
cnot-table}. Every run writes its declared artifacts into --out and
nothing else; reports are written atomically with sorted keys and floats
at 12 significant digits, so identical requests (and seeds) produce
byte-identical files.

Exit codes: 0 success, 2 validation failure, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import algorithms, control, experiments, measurement
from .control import Circuit, GrapeConfig, compile_circuit, gate_matrix, grape_optimize
from .dynamics import evolve_program
from .errors import FitError, NmrqcError, ValidationError
from .quantum import DensityMatrix, state_fidelity
from .spinsys import SpinSystemConfig, load_machine_config, preset

_PRESETS = ("gemini", "triangulum")

# Log-spaced relaxation-delay grids used by `experiment t1|t2` when no
# explicit delays are passed (seconds); they bracket the preset T1/T2 values.
T1_DELAYS_S = (
    20e-6, 50e-6, 100e-6, 200e-6, 400e-6, 1.2e-3, 4e-3, 12e-3,
    50e-3, 200e-3, 1.0, 4.0, 15.0,
)
T2_DELAYS_S = tuple(
    2.0 * h for h in (10e-6, 20e-6, 40e-6, 80e-6, 160e-6, 500e-6, 1.5e-3, 5e-3,
                      20e-3, 80e-3, 320e-3, 1.5)
)


def _canonical(obj):
    """Make a report JSON-stable: floats to 12 significant digits, sorted keys."""
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, complex):
        return {"im": _canonical(obj.imag), "re": _canonical(obj.real)}
    if isinstance(obj, np.ndarray):
        return _canonical(obj.tolist())
    raise ValidationError(f"cannot serialize {type(obj).__name__}")


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def emit_report(obj, fmt: str, path) -> Path:
    """Write a report as canonical JSON or CSV (via the object's csv_text)."""
    path = Path(path)
    if fmt == "json":
        data = obj.to_json_dict() if hasattr(obj, "to_json_dict") else obj
        text = json.dumps(_canonical(data), indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        text = obj if isinstance(obj, str) else obj.csv_text()
    else:
        raise ValidationError(f"unknown report format {fmt!r}")
    _write_atomic(path, text)
    return path


def _machine(arg: str) -> SpinSystemConfig:
    if arg in _PRESETS and not Path(arg).exists():
        return preset(arg)
    return load_machine_config(arg)


def _load_json(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"file not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{p}: line {exc.lineno}: {exc.msg}") from exc


def _out_dir(args) -> Path:
    return Path(args.out)


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad numeric list {text!r}") from exc


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--machine", default="gemini",
                        help="machine config path or preset name (gemini, triangulum)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--path", choices=("ideal", "pulse"), default="ideal")
    parser.add_argument("--relaxation", choices=("on", "off"), default="off")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--pulse-amp-hz", type=float, default=control.DEFAULT_PULSE_AMP_HZ)


def _cmd_simulate(args) -> list[Path]:
    cfg = _machine(args.machine)
    circuit = Circuit.from_json_dict(_load_json(args.circuit))
    relax = args.relaxation == "on"
    ideal = DensityMatrix.basis(circuit.n, 0).evolved(
        control.circuit_unitary(circuit, cfg), validate=True
    )
    if args.path == "pulse":
        program = compile_circuit(circuit, cfg, args.pulse_amp_hz)
        rho = evolve_program(DensityMatrix.basis(circuit.n, 0), program, relaxation=relax)
    else:
        rho = ideal
    report = {
        "command": "simulate",
        "machine": cfg.name,
        "path": args.path,
        "relaxation": args.relaxation,
        "probabilities": rho.probabilities(),
        "fidelity": state_fidelity(rho, ideal),
        "final_state": rho.to_json_dict(),
    }
    return [emit_report(report, "json", _out_dir(args) / "simulate_report.json")]


def _cmd_tomography(args) -> list[Path]:
    cfg = _machine(args.machine)
    rho = DensityMatrix.from_json_dict(_load_json(args.state))
    recon = measurement.tomography(rho, cfg, compiled_readout=args.path == "pulse",
                                   pulse_amp_hz=args.pulse_amp_hz)
    tables = {
        setting: {
            channel: [
                {"freq_hz": p.frequency_hz, "re": p.amplitude.real, "im": p.amplitude.imag}
                for p in peaks
            ]
            for channel, peaks in by_channel.items()
        }
        for setting, by_channel in measurement.tomography_peak_tables(rho, cfg).items()
    }
    report = {
        "command": "tomography",
        "machine": cfg.name,
        "reconstructed": recon.to_json_dict(),
        "max_error_vs_input": float(np.max(np.abs(recon.matrix - rho.matrix))),
        "peak_tables": tables,
    }
    return [emit_report(report, "json", _out_dir(args) / "tomography_report.json")]


def _cmd_compile(args) -> list[Path]:
    cfg = _machine(args.machine)
    circuit = Circuit.from_json_dict(_load_json(args.circuit))
    program = compile_circuit(circuit, cfg, args.pulse_amp_hz)
    return [emit_report(program.to_json_dict(), "json", _out_dir(args) / "pulse_program.json")]


def _cmd_grape(args) -> list[Path]:
    cfg = _machine(args.machine)
    if args.unitary:
        d = _load_json(args.unitary)
        target = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
    elif args.gate:
        targets = tuple(int(t) for t in args.targets.split(",")) if args.targets else (1,)
        params = tuple(_float_list(args.params)) if args.params else ()
        target = gate_matrix(control.Gate(args.gate, targets, params), cfg.n, cfg)
    else:
        raise ValidationError("grape needs --gate or --unitary")
    gcfg = GrapeConfig(
        segments=args.segments,
        dt_s=args.duration_s / args.segments,
        max_iters=args.max_iters,
        target_fidelity=args.target_fidelity,
        initial=args.initial,
    )
    result = grape_optimize(target, cfg, gcfg, seed=args.seed)
    out = _out_dir(args)
    return [
        emit_report(result.csv_text(), "csv", out / "grape_pulse.csv"),
        emit_report(result.metadata_dict(), "json", out / "grape_meta.json"),
    ]


def _cmd_experiment(args) -> list[Path]:
    cfg = _machine(args.machine)
    out = _out_dir(args)
    if args.experiment == "pps":
        program, rho = experiments.prepare_pseudo_pure(cfg)
        from .quantum import pauli_expand

        report = {
            "command": "experiment.pps",
            "machine": cfg.name,
            "program": program.to_json_dict(),
            "final_state": rho.to_json_dict(),
            "pauli_coefficients": pauli_expand(rho),
        }
        return [emit_report(report, "json", out / "pps_report.json")]

    channel = args.channel or cfg.channels[0]
    if args.experiment == "rabi":
        amp = args.amp_hz or 12.5e3
        if args.durations:
            durations = _float_list(args.durations)
        else:
            durations = list(np.linspace(0.0, 2.0 / amp, 17)[1:])
        scan, t90, t180 = experiments.rabi_calibration(cfg, channel, amp, durations)
        fit_report = {
            "command": "experiment.rabi",
            "machine": cfg.name,
            "channel": channel,
            "amplitude_hz": amp,
            "t90_s": t90,
            "t180_s": t180,
            "fit": {"model": scan.fit.model, "params": scan.fit.params,
                    "residual": scan.fit.residual},
        }
        return [
            emit_report(scan.csv_text(), "csv", out / "rabi_scan.csv"),
            emit_report(fit_report, "json", out / "rabi_fit.json"),
        ]

    mode = "T1" if args.experiment == "t1" else "T2"
    delays = _float_list(args.delays) if args.delays else list(
        T1_DELAYS_S if mode == "T1" else T2_DELAYS_S
    )
    scan = experiments.relaxation_experiment(
        cfg,
        channel,
        mode,
        delays,
        amplitude_hz=args.amp_hz or 12.5e3,
        offset_spread_hz=args.offset_spread_hz,
    )
    fit_report = {
        "command": f"experiment.{args.experiment}",
        "machine": cfg.name,
        "channel": channel,
        "fit": {"model": scan.fit.model, "params": scan.fit.params,
                "residual": scan.fit.residual},
    }
    return [
        emit_report(scan.csv_text(), "csv", out / f"{args.experiment}_scan.csv"),
        emit_report(fit_report, "json", out / f"{args.experiment}_fit.json"),
    ]


def _cmd_algorithm(args) -> list[Path]:
    cfg = _machine(args.machine)
    relax = args.relaxation == "on"
    out = _out_dir(args)
    name = args.algorithm
    if name == "deutsch":
        report = algorithms.run_deutsch(args.case or "f1", args.path, cfg, relax).to_json_dict()
    elif name == "grover4":
        report = algorithms.run_grover4(args.target, args.path, cfg, relax).to_json_dict()
    elif name == "bv":
        report = algorithms.run_bernstein_vazirani(args.a, args.path, cfg, relax).to_json_dict()
    elif name == "count":
        ls = [int(v) for v in _float_list(args.l_values)]
        report = algorithms.run_counting(args.case or "M1_first", ls, args.path, cfg,
                                         relax).to_json_dict()
    elif name == "bell":
        report = algorithms.prepare_bell(args.which, args.recipe, args.path, cfg,
                                         relax).to_json_dict()
    elif name == "qho":
        omegas = _float_list(args.omega_t)
        reports = algorithms.simulate_qho(args.initial, omegas, args.path, cfg, relax)
        report = {"algorithm": "qho", "path": args.path,
                  "points": [r.to_json_dict() for r in reports]}
    elif name == "dqc1":
        d = _load_json(args.unitary)
        u = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
        estimate = algorithms.dqc1_trace(u, args.epsilon)
        exact = complex(np.trace(u)) / u.shape[0]
        report = {
            "algorithm": "dqc1",
            "estimate": {"re": estimate.real, "im": estimate.imag},
            "exact": {"re": exact.real, "im": exact.imag},
        }
    elif name == "cnot-table":
        rows = algorithms.cnot_truth_table(args.direction, args.path, cfg, relax)
        report = {"algorithm": "cnot-table", "direction": args.direction,
                  "path": args.path, "rows": rows}
    else:  # pragma: no cover - argparse restricts choices
        raise ValidationError(f"unknown algorithm {name!r}")
    return [emit_report(report, "json", out / f"algorithm_{name.replace('-', '_')}.json")]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nmrqc",
        description="Batch emulator of a desktop NMR quantum computer.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a circuit file and report the final state")
    _add_common(p)
    p.add_argument("--circuit", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("tomography", help="reconstruct a density-matrix JSON via spectra")
    _add_common(p)
    p.add_argument("--state", required=True, help="density-matrix JSON file")
    p.set_defaults(func=_cmd_tomography)

    p = sub.add_parser("compile", help="compile a circuit file to a pulse program")
    _add_common(p)
    p.add_argument("--circuit", required=True)
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("grape", help="optimize a pulse for a target gate")
    _add_common(p)
    p.add_argument("--gate", help="gate name, e.g. X90")
    p.add_argument("--targets", help="comma-separated qubit indices (default 1)")
    p.add_argument("--params", help="comma-separated gate parameters")
    p.add_argument("--unitary", help="JSON file with re/im target matrix")
    p.add_argument("--segments", type=int, default=100)
    p.add_argument("--duration-s", type=float, default=1.5e-3)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--target-fidelity", type=float, default=0.9995)
    p.add_argument("--initial", choices=("random", "constant"), default="random")
    p.set_defaults(func=_cmd_grape)

    p = sub.add_parser("experiment", help="calibration/preparation experiments")
    p.add_argument("experiment", choices=("rabi", "t1", "t2", "pps"))
    _add_common(p)
    p.add_argument("--channel", help="nucleus label (default: first channel)")
    p.add_argument("--amp-hz", type=float, help="pulse amplitude in Hz")
    p.add_argument("--durations", help="comma-separated pulse durations (rabi)")
    p.add_argument("--delays", help="comma-separated delays in s (t1/t2)")
    p.add_argument("--offset-spread-hz", type=float, default=0.0,
                   help="static inhomogeneity half-width for the echo experiment")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("algorithm", help="run a built-in algorithm")
    p.add_argument("algorithm", choices=("deutsch", "grover4", "bv", "count", "bell",
                                         "qho", "dqc1", "cnot-table"))
    _add_common(p)
    p.add_argument("--case", help="deutsch f1..f4 (default f1) / count M0,M1_first,"
                                  "M1_second,M2 (default M1_first)")
    p.add_argument("--target", type=int, default=4, help="grover target 1..4")
    p.add_argument("--a", default="11", help="bernstein-vazirani hidden string")
    p.add_argument("--l-values", default="1,2,3,4,5,6,7,8,9,10")
    p.add_argument("--which", default="phi-", choices=algorithms.BELL_STATES)
    p.add_argument("--recipe", default="cy", choices=("cnot", "cy"))
    p.add_argument("--initial", default="n0", choices=algorithms.QHO_INITIALS)
    p.add_argument("--omega-t", default=",".join(
        f"{0.1 * k * 2 * np.pi:.12g}" for k in range(1, 11)))
    p.add_argument("--unitary", help="JSON re/im matrix for dqc1")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--direction", default="12", choices=("12", "21"))
    p.set_defaults(func=_cmd_algorithm)

    return parser


def dispatch(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        written = args.func(args)
    except (ValidationError, NmrqcError) as exc:
        if isinstance(exc, FitError):
            print(f"error: numerical: {exc}", file=sys.stderr)
            return 3
        print(f"error: validation: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 4
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


def main(argv=None) -> int:
    return dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
