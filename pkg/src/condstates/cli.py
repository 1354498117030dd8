"""Command-line interface.

Exit codes: 0 success, 1 validation or precondition failure, 2 malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence
from typing import Any, TextIO

import numpy as np

from condstates import channels, formats, linalg
from condstates.errors import CondStatesError, MalformedInputError, ScenarioError
from condstates.regions import RegionSpec
from condstates.scenario import Report, Scenario, build_cat_scenario, run
from condstates.tolerances import Tolerances

EXIT_OK, EXIT_INVALID, EXIT_MALFORMED = 0, 1, 2


def format_complex(z: complex, precision: int = 6) -> str:
    re, im = float(np.real(z)), float(np.imag(z))
    # entries below 1e-12 are rounding noise; printing them hides the structure
    re = 0.0 if abs(re) < 1e-12 else re
    im = 0.0 if abs(im) < 1e-12 else im
    return f"{re:.{precision}g}{im:+.{precision}g}i"


def format_matrix(m: Any, precision: int = 6, indent: str = "    ") -> str:
    m = linalg.matrix_from_json(m) if isinstance(m, list) else np.asarray(m)
    cells = [[format_complex(z, precision) for z in row] for row in m]
    width = max(len(c) for row in cells for c in row)
    return "\n".join(indent + "  ".join(c.rjust(width) for c in row) for row in cells)


def _fmt_float(x: float, precision: int) -> str:
    return f"{x + 0.0:.{precision}g}"


def print_report(report: Report, out: TextIO, precision: int) -> None:
    for r in report.results:
        head = f"{r['name']}  [{r.get('op', '')}]  {r.get('type', '')}"
        if "regions" in r:
            head += f" on {','.join(r['regions'])}"
        if "conditioned" in r:
            head += f"  ({','.join(r['target'])} | {','.join(r['conditioned'])}, {r['causal_tag']})"
        out.write(head + "\n")
        stats = []
        if "trace" in r:
            stats.append(f"trace={format_complex(complex(*r['trace']), precision)}")
            stats.append(f"min_eig={_fmt_float(r['min_eigenvalue'], precision)}")
            stats.append(f"herm_residual={_fmt_float(r['hermiticity_residual'], 3)}")
        if "normalization_residual" in r:
            stats.append(f"norm_residual={_fmt_float(r['normalization_residual'], 3)}")
        if r.get("type") == "cptp_report":
            stats.append(f"is_cp={r['is_cp']} is_tp={r['is_tp']} min_eig={_fmt_float(r['min_eigenvalue'], precision)} "
                         f"tp_dev={_fmt_float(r['tp_deviation'], 3)}")
        if stats:
            out.write("  " + "  ".join(stats) + "\n")
        if "matrix" in r:
            out.write(format_matrix(r["matrix"], precision) + "\n")
    for c in report.checks:
        status = "PASS" if c["passed"] else "FAIL"
        out.write(f"check {c['name']}: {c['check']} -> {_fmt_float(c['value'], 3)} [{status}]\n")


def _write_json(obj: Any, out: TextIO) -> None:
    json.dump(obj, out, indent=2)
    out.write("\n")


def _emit_report(report: Report, args: argparse.Namespace) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            _write_json(report.to_dict(), fh)
    if args.json:
        _write_json(report.to_dict(), sys.stdout)
    else:
        print_report(report, sys.stdout, args.precision)


def cmd_run(args: argparse.Namespace) -> int:
    sc = Scenario.load(args.scenario)
    tol = None
    if args.tolerance is not None:
        t = args.tolerance
        tol = Tolerances(herm=t, recon=t, trace=t)
    _emit_report(run(sc, tol), args)
    return EXIT_OK


def cmd_cat(args: argparse.Namespace) -> int:
    povm = None
    if args.povm:
        povm = formats.povm_from_json(formats.read_json(args.povm), region=RegionSpec("B", 2))
    report = run(build_cat_scenario(povm))
    if args.outcome is None:
        _emit_report(report, args)
        return EXIT_OK
    name = f"posterior_{args.outcome.replace('-', '_')}"
    entry = next((r for r in report.results if r["name"] == name), None)
    if entry is None:
        outcomes = [r["name"][len("posterior_"):] for r in report.results if r["name"].startswith("posterior_")]
        raise MalformedInputError(f"unknown outcome {args.outcome!r}; available: {outcomes}")
    probs = report.values["rho_Y"]
    y = probs.region.factors[0].basis_index(args.outcome)
    doc = {
        "outcome": args.outcome,
        "probability": float(np.real(probs.matrix[y, y])),
        "posterior": {"regions": entry["regions"], "matrix": entry["matrix"]},
        "raw_block": entry["raw_block"],
    }
    if args.json:
        _write_json(doc, sys.stdout)
    else:
        print(f"outcome {args.outcome!r} (probability {_fmt_float(doc['probability'], args.precision)})")
        print(f"posterior on {','.join(entry['regions'])}:")
        print(format_matrix(entry["matrix"], args.precision))
    return EXIT_OK


def cmd_verify_choi(args: argparse.Namespace) -> int:
    s = formats.choi_from_json(formats.read_json(args.choi))
    report = channels.verify_cptp(s)
    if args.json:
        _write_json(report.to_dict(), sys.stdout)
    else:
        print(f"convention:            {s.convention}")
        print(f"completely positive:   {report.is_cp}  (min eigenvalue {report.min_eigenvalue:.6g})")
        print(f"trace preserving:      {report.is_tp}  (max|Tr_out - 1| = {report.tp_deviation:.3g})")
        print(f"hermiticity residual:  {report.hermiticity_residual:.3g}")
        print("CPTP" if report.is_cptp else "NOT CPTP")
    return EXIT_OK if report.is_cptp else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="condstates", description="Quantum conditional-states calculus")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a scenario file")
    p.add_argument("scenario")
    p.add_argument("--json", action="store_true", help="emit the full machine-readable report")
    p.add_argument("--out", help="also write the JSON report to this path")
    p.add_argument("--tolerance", type=float, help="validation tolerance (Hermiticity, trace, normalization)")
    p.add_argument("--precision", type=int, default=6, help="significant digits in printed entries")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("cat", help="run the built-in cat remote-measurement scenario")
    p.add_argument("--outcome", help="print the posterior for this outcome (decayed | not-decayed)")
    p.add_argument("--povm", help="POVM file replacing the default projective measurement")
    p.add_argument("--json", action="store_true")
    p.add_argument("--precision", type=int, default=6)
    p.set_defaults(func=cmd_cat)

    p = sub.add_parser("verify-choi", help="check complete positivity and trace preservation")
    p.add_argument("choi")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify_choi)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MalformedInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CondStatesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
