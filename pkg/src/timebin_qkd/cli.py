"""Command-line front end.

Exit status: 0 on success, 1 when a verification, simulation or session
check fails, 2 on usage errors (including refused enumeration budgets).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import BudgetError, KeyAgreementError, TimebinError
from .harness import SweepSpec, format_points, p_grid, run_verification, simulate, sweep
from .rates import TimingParams
from .schemes import Scheme
from .session import SessionConfig, run_session

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
Z_GATE = 5.0

log = logging.getLogger("timebin_qkd")


class UsageError(Exception):
    pass


def _int_list(values: Optional[Sequence[str]], default: Sequence[int]) -> list[int]:
    if not values:
        return list(default)
    out = []
    for chunk in values:
        for item in chunk.split(","):
            item = item.strip()
            if item:
                try:
                    out.append(int(item))
                except ValueError:
                    raise UsageError(f"not an integer: {item!r}") from None
    return out


def _scheme_list(values: Optional[Sequence[str]], default: Sequence[str]) -> list[Scheme]:
    raw = default if values is None else [x.strip() for v in values for x in v.split(",") if x.strip()]
    return [Scheme.parse(v) for v in raw]


def _parse_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--p-grid expects start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(x) for x in parts)
    except ValueError:
        raise UsageError(f"--p-grid expects numbers, got {text!r}") from None
    return p_grid(start, stop, step)


def _p_values(args, default_grid: str) -> list[float]:
    if args.p is not None:
        try:
            return [float(x) for chunk in args.p for x in chunk.split(",") if x.strip()]
        except ValueError:
            raise UsageError(f"--p expects numbers, got {args.p!r}") from None
    return _parse_grid(args.p_grid or default_grid)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_rate(args) -> int:
    spec = SweepSpec(
        schemes=tuple(_scheme_list(args.scheme, ["SB", "AB", "AAB", "AF"])),
        n_values=tuple(_int_list(args.n, [8, 16, 64])),
        k_values=tuple(_int_list(args.k, [1])),
        p_values=tuple(_p_values(args, "0.01:0.99:0.01")),
        timing=TimingParams(T=args.T, D=args.D),
    )
    _emit(format_points(sweep(spec, jobs=args.jobs), args.format), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    report = run_verification(
        n_values=_int_list(args.n, [4, 8, 16]),
        p_values=_p_values(args, "0.05:0.95:0.05"),
    )
    if args.format == "json":
        _emit(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    else:
        lines = [
            f"rate checks: {report.checks}, max |analytic - enumerated| = {report.max_abs_error:.3e}",
            f"partition compositions checked: {report.partitions_checked}",
        ]
        lines += [f"FAIL {msg}" for msg in report.failures + report.partition_violations]
        lines.append("PASS" if report.passed else "FAIL")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_simulate(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    schemes = _scheme_list(args.scheme, ["AF"])
    ns = _int_list(args.n, [8])
    ks = _int_list(args.k, [1])
    ps = _p_values(args, "0.2:0.2:0.1")
    if len(schemes) != 1 or len(ns) != 1 or len(ks) != 1 or len(ps) != 1:
        raise UsageError("simulate takes a single scheme, n, k and p")
    result = simulate(schemes[0], ns[0], ps[0], args.trials, args.seed, k=ks[0])
    ok = abs(result["z"]) <= Z_GATE
    result["passed"] = ok
    if args.format == "json":
        _emit(json.dumps(result, indent=2) + "\n", args.out)
    else:
        header = list(result)
        row = ["" if result[h] is None else repr(result[h]) if isinstance(result[h], float) else str(result[h]) for h in header]
        _emit(",".join(header) + "\n" + ",".join(row) + "\n", args.out)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_session(args) -> int:
    path = Path(args.config)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a flat JSON object")
    config = SessionConfig.from_dict(data)
    try:
        report = run_session(config)
    except KeyAgreementError as exc:
        log.error("key mismatch: %s", exc)
        return EXIT_CHECK_FAILED
    _emit(report.to_json(indent=2) + "\n", args.out)
    return EXIT_OK if report.keys_agree else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timebin-qkd",
        description="Raw key rates of time-bin encoding schemes for entanglement-based QKD.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_default="csv"):
        p.add_argument("--scheme", action="append", help="SB, AB, AAB, AF (repeat or comma-separate)")
        p.add_argument("--n", action="append", help="frame length(s), powers of two")
        p.add_argument("--k", action="append", help="bin size(s) for simple binning")
        grid = p.add_mutually_exclusive_group()
        grid.add_argument("--p", action="append", help="explicit occupancy probabilities")
        grid.add_argument("--p-grid", help="start:stop:step, inclusive")
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--format", choices=("csv", "json"), default=fmt_default)

    rate = sub.add_parser("rate", help="closed-form rate sweep as CSV/JSON")
    common(rate)
    rate.add_argument("--T", type=float, default=1.0, help="time unit length in seconds")
    rate.add_argument("--D", type=float, default=0.0, help="public-channel time per window in seconds")
    rate.add_argument("--jobs", type=int, default=1, help="worker processes")
    rate.set_defaults(func=cmd_rate)

    verify = sub.add_parser("verify", help="closed forms vs exhaustive enumeration")
    common(verify, fmt_default="csv")
    verify.set_defaults(func=cmd_verify)

    sim = sub.add_parser("simulate", help="Monte Carlo estimate vs closed form")
    common(sim, fmt_default="json")
    sim.add_argument("--trials", type=int, default=100_000)
    sim.add_argument("--seed", type=int, default=0)
    sim.set_defaults(func=cmd_simulate)

    sess = sub.add_parser("session", help="paired Alice/Bob run from a JSON config")
    sess.add_argument("config", help="flat JSON object with SessionConfig fields")
    sess.add_argument("--out", help="write the report here instead of stdout")
    sess.set_defaults(func=cmd_session)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, TimebinError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
