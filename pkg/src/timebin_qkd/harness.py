"""Sweeps, verification suite and simulation reports behind the CLI."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .arrival import check_frame_length
from .errors import BudgetError, ConfigurationError
from .oracle import compositions, enumerate_rate, is_balanced, monte_carlo_rate, partition_bound_check
from .rates import RATE_FUNCTIONS, RateCurvePoint, TimingParams, rate_curve_point, raw_rate
from .schemes import Scheme

__all__ = [
    "CSV_HEADER",
    "VERIFY_TOLERANCE",
    "VERIFY_MAX_N",
    "SweepSpec",
    "p_grid",
    "sweep",
    "format_points",
    "VerificationReport",
    "run_verification",
    "partition_bound_sweep",
    "simulate",
]

CSV_HEADER = ("scheme", "n", "k", "p", "raw_rate", "utilization", "effective_rate")
VERIFY_TOLERANCE = 1e-10
VERIFY_MAX_N = 16
PARTITION_MAX_N = 12


def p_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive grid ``start, start+step, ..., <= stop`` inside (0, 1).

    Points are rounded to 12 decimals so they print the same way every run.
    """
    if not step > 0:
        raise ConfigurationError(f"p-grid step must be positive, got {step}")
    if not (0.0 < start <= stop < 1.0):
        raise ConfigurationError(f"p-grid must satisfy 0 < start <= stop < 1, got {start}:{stop}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


@dataclass(frozen=True)
class SweepSpec:
    schemes: tuple[Scheme, ...]
    n_values: tuple[int, ...]
    p_values: tuple[float, ...]
    k_values: tuple[int, ...] = (1,)
    timing: TimingParams = field(default_factory=TimingParams)

    def __post_init__(self):
        if not self.schemes:
            raise ConfigurationError("at least one scheme is required")
        if not self.n_values:
            raise ConfigurationError("at least one frame length is required")
        if not self.p_values:
            raise ConfigurationError("the p-grid is empty")
        object.__setattr__(self, "schemes", tuple(sorted({Scheme.parse(s) for s in self.schemes}, key=_scheme_order)))
        for n in self.n_values:
            check_frame_length(n)
        for p in self.p_values:
            if not 0.0 < p < 1.0:
                raise ConfigurationError(f"p-grid values must lie in (0, 1), got {p}")
        if Scheme.SB in self.schemes and not self.k_values:
            raise ConfigurationError("simple binning needs at least one bin size")

    def points(self) -> list[tuple[Scheme, int, Optional[int], float]]:
        out = []
        for scheme in self.schemes:
            for n in sorted(set(self.n_values)):
                ks = sorted(set(self.k_values)) if scheme is Scheme.SB else [None]
                for k in ks:
                    for p in sorted(set(self.p_values)):
                        out.append((scheme, n, k, p))
        return out


def _scheme_order(s: Scheme) -> int:
    return list(Scheme).index(s)


def _evaluate(args) -> RateCurvePoint:
    scheme, n, k, p, timing = args
    return rate_curve_point(scheme, n, p, k=k, timing=timing)


def sweep(spec: SweepSpec, jobs: int = 1) -> list[RateCurvePoint]:
    """Evaluate every grid point; output order is fixed by :meth:`SweepSpec.points`."""
    tasks = [(s, n, k, p, spec.timing) for s, n, k, p in spec.points()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_evaluate, tasks, chunksize=64))
    return [_evaluate(t) for t in tasks]


def _row(point: RateCurvePoint) -> dict:
    return {
        "scheme": point.scheme.value,
        "n": point.n,
        "k": "" if point.k is None else point.k,
        "p": point.p,
        "raw_rate": point.raw_rate,
        "utilization": point.utilization,
        "effective_rate": point.effective_rate,
    }


def format_points(points: Iterable[RateCurvePoint], fmt: str = "csv") -> str:
    rows = [_row(pt) for pt in points]
    if fmt == "json":
        for row in rows:
            if row["k"] == "":
                row["k"] = None
        return json.dumps(rows, indent=2) + "\n"
    if fmt != "csv":
        raise ConfigurationError(f"unknown output format {fmt!r}")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    writer.writerows({key: (repr(v) if isinstance(v, float) else v) for key, v in row.items()} for row in rows)
    return buf.getvalue()


@dataclass
class VerificationReport:
    checks: int = 0
    max_abs_error: float = 0.0
    failures: list[str] = field(default_factory=list)
    partitions_checked: int = 0
    partition_violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures and not self.partition_violations

    def to_dict(self) -> dict:
        return {"passed": self.passed, **asdict(self)}


def partition_bound_sweep(max_n: int = PARTITION_MAX_N) -> tuple[int, list[str]]:
    """Check every composition of every ``n <= max_n``.

    A violation is either a composition beating the balanced value or a
    composition that attains it without being balanced (or vice versa).
    """
    checked = 0
    bad = []
    for n in range(1, max_n + 1):
        for g in range(1, n + 1):
            m, r = divmod(n, g)
            bound = r * math.log2(m + 1) + (g - r) * math.log2(m)
            for sizes in compositions(n, g):
                checked += 1
                if not partition_bound_check(n, g, sizes):
                    bad.append(f"n={n} sizes={sizes} exceeds bound")
                    continue
                total = math.fsum(math.log2(d) for d in sizes)
                attains = math.isclose(total, bound, rel_tol=1e-12, abs_tol=1e-12)
                if attains != is_balanced(n, sizes):
                    bad.append(f"n={n} sizes={sizes} equality/balance mismatch")
    return checked, bad


def run_verification(
    n_values: Sequence[int] = (4, 8, 16),
    p_values: Optional[Sequence[float]] = None,
    rate_functions: Optional[Mapping[Scheme, Callable]] = None,
    tolerance: float = VERIFY_TOLERANCE,
    partition_max_n: int = PARTITION_MAX_N,
) -> VerificationReport:
    """Compare every closed-form rate with exhaustive enumeration.

    ``rate_functions`` overrides the formulas under test, keyed by scheme;
    SB functions take ``(p, n, k)``, the rest ``(p, n)``.
    """
    for n in n_values:
        if n > VERIFY_MAX_N:
            raise BudgetError(f"refusing to enumerate 2**{n} frames; verify is limited to n <= {VERIFY_MAX_N}")
        check_frame_length(n)
    if p_values is None:
        p_values = p_grid(0.05, 0.95, 0.05)
    fns = dict(RATE_FUNCTIONS)
    if rate_functions:
        fns.update({Scheme.parse(s): f for s, f in rate_functions.items()})

    report = VerificationReport()
    for n in sorted(set(n_values)):
        cases: list[tuple[Scheme, Optional[int]]] = [(Scheme.SB, 1 << i) for i in range(n.bit_length())]
        if n >= 4:
            cases.append((Scheme.AB, None))
        cases += [(Scheme.AAB, None), (Scheme.AF, None)]
        for scheme, k in cases:
            for p in p_values:
                analytic = fns[scheme](p, n, k) if scheme is Scheme.SB else fns[scheme](p, n)
                enumerated = enumerate_rate(scheme, p, n, k).expected_bits_per_unit
                err = abs(analytic - enumerated)
                report.checks += 1
                report.max_abs_error = max(report.max_abs_error, err)
                if not err <= tolerance:
                    label = scheme.value + (f"(k={k})" if k is not None else "")
                    report.failures.append(
                        f"{label} n={n} p={p}: analytic={analytic!r} enumerated={enumerated!r}"
                    )
    report.partitions_checked, report.partition_violations = partition_bound_sweep(partition_max_n)
    return report


def simulate(scheme, n: int, p: float, trials: int, seed: int, k: Optional[int] = None) -> dict:
    """Monte Carlo estimate next to the closed-form value."""
    scheme = Scheme.parse(scheme)
    if trials < 1:
        raise ConfigurationError(f"trials must be >= 1, got {trials}")
    if scheme is not Scheme.SB:
        k = None
    analytic = raw_rate(scheme, p, n, k)
    est = monte_carlo_rate(scheme, p, n, trials, seed, k=k)
    return {
        "scheme": scheme.value,
        "n": n,
        "k": k,
        "p": p,
        "trials": trials,
        "seed": seed,
        "estimate": est.mean,
        "standard_error": est.standard_error,
        "analytic": analytic,
        "z": est.z_score(analytic),
    }
