"""Command-line entry point.

Exit codes: 0 on success, 2 for configuration or input errors, 3 when a
numerical contract is violated.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import reports
from .errors import (
    ConfigError,
    ContractViolationError,
    InvalidArgumentError,
    UnderdeterminedError,
    ZeroProbabilityBranchError,
)
from .nmr import MOLECULE_ENV
from .tomography import read_records_csv, write_records_csv

log = logging.getLogger("qwtransfer")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", default="plus",
                   help="zero, one, plus, plus_i (alias minus) or 'a,b' amplitudes (default: plus)")
    p.add_argument("--layout", choices=("theory", "nmr"), default="nmr")
    p.add_argument("--noise", action="store_true", help="apply T1/T2 relaxation from the molecule file")
    p.add_argument("--molecule", default=os.environ.get(MOLECULE_ENV),
                   help=f"molecule YAML (default: ${MOLECULE_ENV} or the packaged placeholder)")
    p.add_argument("--segments", default=None, help="segment duration YAML")
    p.add_argument("--granularity", choices=("segment", "gate"), default="segment")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=0.0, help="Gaussian readout noise on Pauli expectations")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qwtransfer", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transfer", help="run the walk-based transfer and report states and fidelities")
    _common(p)

    p = sub.add_parser("tomo-state", help="reconstruct the four-qubit state from Pauli expectations")
    _common(p)
    p.add_argument("--records", default=None, help="CSV of measured expectations (observable,expectation,uncertainty)")
    p.add_argument("--dump-records", default=None, help="also write the simulated records to this CSV")

    p = sub.add_parser("tomo-process", help="process matrices of every measurement branch")
    _common(p)

    p = sub.add_parser("witness", help="entanglement witness value of the post-walk state")
    _common(p)
    p.add_argument("--rho", default=None, help="density matrix CSV (row,col,re,im) to evaluate instead")

    p = sub.add_parser("noise-sweep", help="fidelities and witness over a grid of noise scalings")
    _common(p)
    p.add_argument("--duration-scales", type=_floats, default=[0.5, 1.0, 1.5, 2.0])
    p.add_argument("--t2-scales", type=_floats, default=[1.0])
    p.set_defaults(noise=True)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _run(args: argparse.Namespace) -> None:
    cfg = reports.RunConfig(
        input=args.input, layout=args.layout, noise=args.noise, molecule=args.molecule,
        segments=args.segments, seed=args.seed, sigma=args.sigma, granularity=args.granularity,
    )
    log.info("config %s", cfg)
    cmd = args.command
    if cmd == "transfer":
        report = reports.transfer_report(cfg)
        csv_text = reports.density_csv(report["four_qubit_state"])
    elif cmd == "tomo-state":
        records = read_records_csv(args.records) if args.records else None
        if args.dump_records:
            simulated = reports.simulate_records(cfg)
            write_records_csv(simulated, args.dump_records)
            records = records if records is not None else simulated
        report = reports.tomo_state_report(cfg, records)
        csv_text = reports.density_csv(report["reconstructed_state"])
    elif cmd == "tomo-process":
        report = reports.tomo_process_report(cfg)
        csv_text = reports.chi_csv(report)
    elif cmd == "witness":
        rho = reports.read_density_csv(args.rho) if args.rho else None
        report = reports.witness_report(cfg, rho)
        csv_text = f"witness\n{report['witness']!r}\n"
    elif cmd == "noise-sweep":
        rows = reports.noise_sweep_rows(cfg, args.duration_scales, args.t2_scales)
        report = {
            "schema_version": reports.SCHEMA_VERSION,
            "metadata": reports._metadata(cfg, cmd),
            "rows": rows,
        }
        csv_text = reports.rows_to_csv(rows)
    else:  # pragma: no cover - argparse guards this
        raise ConfigError(f"unknown command {cmd!r}")
    _emit(reports.dumps(report) if args.format == "json" else csv_text, args.out)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _run(args)
    except (ContractViolationError, ZeroProbabilityBranchError, UnderdeterminedError) as exc:
        print(f"qwtransfer: numerical contract violated: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, InvalidArgumentError, OSError) as exc:
        print(f"qwtransfer: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
