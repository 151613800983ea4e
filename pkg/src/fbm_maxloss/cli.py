"""Command-line front end.

Subcommands: ``simulate``, ``bounds``, ``vitale``, ``compare``, ``selftest``.
Exit codes: 0 success, 1 usage or runtime error, 2 bound ordering violation.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BoundReport, bound_report, comparison_distance, max_loss_bounds
from .core import HurstParameter, TimeGrid, covariance, rescale_expected_max_loss
from .errors import FbmError, NotPositiveDefiniteError, ValidationError
from .pathstats import maximum_loss
from .report import Table
from .simulation import (
    ALGORITHM_LABEL,
    McEstimate,
    SeedManifest,
    cached_factor,
    monte_carlo_max_loss,
)
from .vitale import (
    MAX_N,
    VitaleResult,
    build_increment_family,
    expected_max_comonotone,
    expected_max_independent,
    vitale_lower_bound,
)

log = logging.getLogger("fbm_maxloss")

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2
SE_SLACK = 3.0

DEFAULTS = {
    "hurst": "0.5,0.6,0.7,0.8,0.9",
    "steps": "2048",
    "paths": "5000",
    "vitale-n": "5,10,20,30,40,50",
    "seed": "20240601",
    "format": "csv",
    "out": None,
    "horizon": "1",
    "factor-cache": None,
    "tail-x": None,
}


class UsageError(FbmError):
    pass


@dataclass
class ExperimentConfig:
    h_list: list[HurstParameter]
    n_steps: int = 2048
    horizon: float = 1.0
    n_paths: int = 5000
    vitale_n_list: list[int] = field(default_factory=lambda: [5, 10, 20, 30, 40, 50])
    master_seed: int = 20240601
    output_format: str = "csv"
    output_path: Path | None = None
    factor_cache: Path | None = None
    tail_x: float | None = None

    def validate(self, needs_paths: bool = False) -> None:
        if not self.h_list:
            raise UsageError("hurst: list must not be empty")
        if self.n_steps < 1:
            raise UsageError("steps: must be >= 1")
        if not self.horizon > 0:
            raise UsageError("horizon: must be positive")
        if needs_paths and self.n_paths < 2:
            raise UsageError("paths: need at least 2 paths to simulate")
        if self.n_paths < 0 or self.n_paths == 1:
            raise UsageError("paths: must be 0 (no simulation) or >= 2")
        if self.output_format not in ("csv", "md"):
            raise UsageError("format: must be csv or md")
        if not 0 <= self.master_seed < 2**64:
            raise UsageError("seed: must fit in 64 unsigned bits")
        if self.tail_x is not None and not self.tail_x > 0:
            raise UsageError("tail-x: must be positive")

    def manifest(self, command: str) -> dict[str, str]:
        return {
            "command": command,
            "version": __version__,
            "hurst": ",".join(repr(h.h) for h in self.h_list),
            "steps": str(self.n_steps),
            "horizon": repr(self.horizon),
            "paths": str(self.n_paths),
            "vitale-n": ",".join(map(str, self.vitale_n_list)),
            "seed": str(self.master_seed),
            "rng": ALGORITHM_LABEL,
            "format": self.output_format,
        }


# ---------------------------------------------------------------------------
# configuration parsing


def read_config_file(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment. Keys match the long flags."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config: line {lineno} is not key=value")
        key, _, value = line.partition("=")
        key = key.strip().replace("_", "-")
        if key not in DEFAULTS:
            raise UsageError(f"config: unknown key {key!r} on line {lineno}")
        values[key] = value.strip()
    return values


def _float_list(name, text):
    try:
        items = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    return items


def _int(name, text):
    try:
        return int(text)
    except (TypeError, ValueError):
        raise UsageError(f"{name}: expected an integer, got {text!r}") from None


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            merged[key] = value

    h_list = []
    for h in _float_list("hurst", merged["hurst"]):
        try:
            h_list.append(HurstParameter(h))
        except FbmError as exc:
            raise UsageError(f"hurst: {exc}") from None
    vitale_n = [_int("vitale-n", x) for x in merged["vitale-n"].split(",") if x.strip()]
    try:
        horizon = float(merged["horizon"])
    except ValueError:
        raise UsageError(f"horizon: expected a number, got {merged['horizon']!r}") from None
    tail_x = None
    if merged["tail-x"] is not None:
        try:
            tail_x = float(merged["tail-x"])
        except ValueError:
            raise UsageError(f"tail-x: expected a number, got {merged['tail-x']!r}") from None
    return ExperimentConfig(
        h_list=h_list,
        n_steps=_int("steps", merged["steps"]),
        horizon=horizon,
        n_paths=_int("paths", merged["paths"]),
        vitale_n_list=vitale_n,
        master_seed=_int("seed", merged["seed"]),
        output_format=merged["format"],
        output_path=Path(merged["out"]) if merged["out"] else None,
        factor_cache=Path(merged["factor-cache"]) if merged["factor-cache"] else None,
        tail_x=tail_x,
    )


# ---------------------------------------------------------------------------
# commands


def run_simulations(config: ExperimentConfig) -> dict[float, McEstimate]:
    """E(M_1) per H on a unit grid; the horizon is applied afterwards by self-similarity."""
    unit = TimeGrid(1.0, config.n_steps)
    out = {}
    for stream, hp in enumerate(config.h_list):
        factor = cached_factor(hp, unit, config.factor_cache)
        seed = SeedManifest(config.master_seed, stream_id=stream)
        out[hp.h] = monte_carlo_max_loss(hp, unit, config.n_paths, seed, factor=factor)
    return out


def cmd_simulate(config: ExperimentConfig) -> tuple[Table, int]:
    config.validate(needs_paths=True)
    table = Table(
        columns=[
            "h", "n_steps", "n_paths", "horizon", "mean_M1", "se_M1", "mean_Mt", "se_Mt",
            "master_seed", "stream_id",
        ],
        manifest=config.manifest("simulate"),
        title="Monte Carlo expected maximum loss (Cholesky)",
    )
    for h, est in run_simulations(config).items():
        scale = config.horizon**h
        log.info("H=%g runtime %.2fs", h, est.runtime_s)
        table.add(
            h=h, n_steps=config.n_steps, n_paths=est.n_paths, horizon=config.horizon,
            mean_M1=est.mean, se_M1=est.std_error, mean_Mt=est.mean * scale,
            se_Mt=est.std_error * scale, master_seed=est.manifest.master_seed,
            stream_id=est.manifest.stream_id,
        )
    return table, 0


def cmd_bounds(config: ExperimentConfig) -> tuple[Table, int]:
    config.validate()
    table = Table(
        columns=["h", "horizon", "label", "kind", "target", "value", "raw_value", "source", "status"],
        manifest=config.manifest("bounds"),
        title="Closed-form bounds",
    )
    violations = 0
    for hp in config.h_list:
        report = bound_report(hp, config.horizon, config.tail_x)
        violations += len(report.ordering_violations())
        for e in report.entries:
            table.add(
                h=hp.h, horizon=config.horizon, label=e.label, kind=e.kind, target=e.target,
                value=e.value, raw_value=e.raw_value, source=e.source,
                status="ok" if e.valid else "out of proven regime",
            )
    return table, violations


def run_vitale(config: ExperimentConfig) -> dict[tuple[float, int], VitaleResult]:
    if not config.vitale_n_list:
        raise UsageError("vitale-n: list must not be empty")
    for n in config.vitale_n_list:
        if n < 1:
            raise UsageError("vitale-n: values must be >= 1")
        if n > MAX_N:
            raise UsageError(f"vitale-n: n={n} exceeds the maximum {MAX_N}")
    results = {}
    for hp in config.h_list:
        if not hp.in_long_memory_regime():
            log.warning("H=%g outside [1/2, 1): comparison bounds skipped", hp.h)
            continue
        for n in config.vitale_n_list:
            results[hp.h, n] = vitale_lower_bound(n, hp)
    return results


def cmd_vitale(config: ExperimentConfig) -> tuple[Table, int]:
    config.validate()
    results = run_vitale(config)
    ns = config.vitale_n_list
    table = Table(
        columns=["h", "method"] + [f"n={n}" for n in ns],
        manifest=config.manifest("vitale"),
        title="Comparison lower bounds on E(M_1)",
    )
    for hp in config.h_list:
        if not hp.in_long_memory_regime():
            continue
        table.add(h=hp.h, method="IDD", **{f"n={n}": results[hp.h, n].idd_bound for n in ns})
        table.add(h=hp.h, method="PDDD", **{f"n={n}": results[hp.h, n].pddd_bound for n in ns})
    return table, 0


@dataclass
class ComparisonRow:
    h: float
    mc_mean: float | None
    mc_se: float | None
    lowers: dict[str, float]
    uppers: dict[str, float]
    violations: list[str] = field(default_factory=list)
    closest_lower: str | None = None
    closest_upper: str | None = None


NEW_LOWER, NEW_UPPER = "new_lower", "new_upper"
PRIOR_LOWER, PRIOR_UPPER = "prior_lower", "prior_upper"


def build_comparison_row(
    h: float,
    lowers: dict[str, float],
    uppers: dict[str, float],
    mc_mean: float | None = None,
    mc_se: float | None = None,
) -> ComparisonRow:
    """Check a row for ordering violations and find the bounds nearest the estimate."""
    row = ComparisonRow(h=h, mc_mean=mc_mean, mc_se=mc_se, lowers=dict(lowers), uppers=dict(uppers))
    if NEW_LOWER in lowers and PRIOR_LOWER in lowers and not lowers[PRIOR_LOWER] < lowers[NEW_LOWER]:
        row.violations.append(f"{NEW_LOWER}<={PRIOR_LOWER}")
    if NEW_UPPER in uppers and PRIOR_UPPER in uppers and not uppers[NEW_UPPER] < uppers[PRIOR_UPPER]:
        row.violations.append(f"{NEW_UPPER}>={PRIOR_UPPER}")
    for lo_name, lo in lowers.items():
        for up_name, up in uppers.items():
            if lo > up:
                row.violations.append(f"{lo_name}>{up_name}")
    if mc_mean is not None:
        slack = SE_SLACK * (mc_se or 0.0)
        for name, value in lowers.items():
            if value > mc_mean + slack:
                row.violations.append(f"{name}>MC+3SE")
        for name, value in uppers.items():
            if value < mc_mean - slack:
                row.violations.append(f"{name}<MC-3SE")
        if lowers:
            row.closest_lower = min(lowers, key=lambda k: abs(lowers[k] - mc_mean))
        if uppers:
            row.closest_upper = min(uppers, key=lambda k: abs(uppers[k] - mc_mean))
    return row


def comparison_table(
    rows: list[ComparisonRow], manifest: dict[str, str], vitale_n: list[int], with_mc: bool
) -> Table:
    columns = ["h"]
    if with_mc:
        columns += ["mc_mean", "mc_se"]
    columns += [PRIOR_LOWER, PRIOR_UPPER, NEW_LOWER, NEW_UPPER]
    columns += [f"idd_n{n}" for n in vitale_n] + [f"pddd_n{n}" for n in vitale_n]
    if with_mc:
        columns += ["closest_lower", "closest_upper"]
    columns += ["violations"]
    table = Table(columns=columns, manifest=manifest, title="Expected maximum loss up to time 1: estimates and bounds")
    for row in rows:
        values = {"h": row.h, **row.lowers, **row.uppers}
        if with_mc:
            values.update(
                mc_mean=row.mc_mean, mc_se=row.mc_se,
                closest_lower=row.closest_lower, closest_upper=row.closest_upper,
            )
        values["violations"] = ";".join(row.violations) or None
        table.add(**{k: v for k, v in values.items() if k in columns})
    return table


def cmd_compare(config: ExperimentConfig) -> tuple[Table, int]:
    """Estimates and every bound at horizon 1, one row per H."""
    config.validate()
    with_mc = config.n_paths > 0
    mc = run_simulations(config) if with_mc else {}
    if config.horizon != 1.0:
        log.info("compare reports horizon-1 quantities; --horizon %g ignored", config.horizon)
    vitale = run_vitale(config) if config.vitale_n_list else {}
    rows = []
    for hp in config.h_list:
        report: BoundReport = bound_report(hp, 1.0)
        lowers, uppers = {}, {}
        for e in report.by_target("E(M)"):
            if not e.valid:
                continue
            name = {
                ("lower", True): NEW_LOWER, ("upper", True): NEW_UPPER,
                ("lower", False): PRIOR_LOWER, ("upper", False): PRIOR_UPPER,
            }[e.kind, "new" in e.label]
            (lowers if e.kind == "lower" else uppers)[name] = e.value
        for n in config.vitale_n_list:
            if (hp.h, n) in vitale:
                lowers[f"idd_n{n}"] = vitale[hp.h, n].idd_bound
                lowers[f"pddd_n{n}"] = vitale[hp.h, n].pddd_bound
        est = mc.get(hp.h)
        rows.append(
            build_comparison_row(
                hp.h, lowers, uppers,
                mc_mean=est.mean if est else None, mc_se=est.std_error if est else None,
            )
        )
    for row in rows:
        for v in row.violations:
            log.warning("H=%g: ordering violation %s", row.h, v)
    table = comparison_table(rows, config.manifest("compare"), config.vitale_n_list, with_mc)
    return table, sum(len(r.violations) for r in rows)


def selftest() -> int:
    """Fast consistency checks; prints one PASS/FAIL line each."""
    rng = np.random.default_rng(0)
    checks = []

    lo, up = max_loss_bounds(0.7, 1.0)
    checks.append(("new bounds 1/sqrt(pi), 2/sqrt(pi)",
                   abs(lo - 1 / math.sqrt(math.pi)) < 1e-12 and abs(up - 2 / math.sqrt(math.pi)) < 1e-12))
    s, t = rng.random(50), rng.random(50)
    checks.append(("H=1/2 covariance is min(s,t)",
                   np.max(np.abs(covariance(s, t, 0.5) - np.minimum(s, t))) < 1e-12))
    ok = True
    for _ in range(50):
        path = np.concatenate(([0.0], np.cumsum(rng.standard_normal(rng.integers(1, 60)))))
        brute = max(path[u] - path[v] for u in range(path.size) for v in range(u, path.size))
        ok &= maximum_loss(path) == brute
    checks.append(("single-pass maximum loss equals brute force", ok))
    fam = build_increment_family(4, 0.75)
    d = 0.25
    ends = [(i * d, (i - j) * d) for i, j in fam.members]
    ok = all(
        abs(fam.dist_sq[p, q] - comparison_distance(*ends[p], *ends[q], 0.75)) < 1e-12
        for p in range(fam.size) for q in range(fam.size)
    )
    checks.append(("increment distances match covariance expansion", ok))
    checks.append(("E max of two iid normals = 1/sqrt(pi)",
                   abs(expected_max_independent([1.0, 1.0]) - 1 / math.sqrt(math.pi)) < 1e-7))
    a = rng.standard_normal(7)
    checks.append(("comonotone closed form equals quadrature",
                   abs(expected_max_comonotone(a) - expected_max_comonotone(a, "quadrature")) < 1e-8))
    grid = TimeGrid(1.0, 32)
    e1 = monte_carlo_max_loss(0.7, grid, 64, SeedManifest(7), workers=1)
    e2 = monte_carlo_max_loss(0.7, grid, 64, SeedManifest(7), workers=4)
    checks.append(("seeded simulation independent of worker count", e1 == e2))
    checks.append(("self-similarity rescaling",
                   abs(rescale_expected_max_loss(2 * 10000**0.7, 10000, 0.7) - 2.0) < 1e-12))

    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
    return EXIT_OK if all(p for _, p in checks) else EXIT_USAGE


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--hurst", help="comma-separated Hurst parameters")
    common.add_argument("--steps", help="grid steps for simulation")
    common.add_argument("--paths", help="Monte Carlo paths per H (0 disables simulation in compare)")
    common.add_argument("--vitale-n", dest="vitale_n", help="comma-separated discretization sizes")
    common.add_argument("--seed", help="master seed (64-bit unsigned)")
    common.add_argument("--horizon", help="time horizon t (default 1)")
    common.add_argument("--tail-x", dest="tail_x", help="also report the tail bound P(M_t > x)")
    common.add_argument("--format", choices=["csv", "md"])
    common.add_argument("--out", help="output file (also echoed to stdout)")
    common.add_argument("--config", help="key=value config file; flags override it")
    common.add_argument("--factor-cache", dest="factor_cache", help="directory for cached Cholesky factors")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="fbm-maxloss", description="Expected maximum loss of fractional Brownian motion")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="Monte Carlo estimates of E(M_1)")
    sub.add_parser("bounds", parents=[common], help="closed-form bounds")
    sub.add_parser("vitale", parents=[common], help="comparison lower bounds (table by n)")
    sub.add_parser("compare", parents=[common], help="estimates and all bounds side by side")
    sub.add_parser("selftest", help="quick consistency checks")
    return parser


COMMANDS = {"simulate": cmd_simulate, "bounds": cmd_bounds, "vitale": cmd_vitale, "compare": cmd_compare}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.command == "selftest":
        return selftest()
    try:
        config = build_config(args)
        table, violations = COMMANDS[args.command](config)
    except (UsageError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotPositiveDefiniteError as exc:
        print(f"error: factorization failed: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FbmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = table.render(config.output_format)
    if config.output_path is not None:
        config.output_path.write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    if violations:
        print(f"{violations} ordering violation(s)", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
