"""Command-line entry point: ``qclca <command> [options]``.

Exit status: 0 success, 1 dataset validation failure, 2 computation
failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from collections.abc import Sequence
from pathlib import Path

from . import report
from .dataset import DATASET_ENV, Dataset, DatasetError, load_and_validate
from .hpc import HpcConfig, table21_crosscheck
from .impact import INDICATORS, PHASES, Phase, aggregate_phases
from .lci import LCIError
from .quantum import QuantumConfig
from .scenario import DEFAULT_GRID_H, Engine, Scenario, run_sensitivity

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_COMPUTE = 2
EXIT_USAGE = 64

SENSITIVITY_SET = ("A", "A'", "B", "B'")

FACT_UNITS = (
    ("_L_per_h", "L/h"),
    ("_kWh_per_blade", "kWh/yr"),
    ("_kW", "kW"),
    ("_kg", "kg"),
    ("_tkm", "t*km"),
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _hours_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of hours: {text!r}")
    if not values or any(not math.isfinite(v) or v < 0 for v in values):
        raise argparse.ArgumentTypeError(f"hours must be finite and >= 0: {text!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--dataset", type=Path, default=None,
                        help=f"dataset directory (default: ${DATASET_ENV} or the bundled reference)")
    common.add_argument("--out", type=Path, default=Path("qclca-out"), help="output directory")
    common.add_argument("--method", default=None, help="impact method name")
    common.add_argument("--replacement-multiplier", type=int, default=None, metavar="M",
                        help="hardware sets added per lifetime boundary is M-1 (1 = off)")

    parser = _Parser(prog="qclca", description="Life-cycle comparison of quantum and classical computers.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("validate", parents=[common], help="load and check a dataset")

    model = sub.add_parser("model", help="evaluate one system")
    model_sub = model.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    for kind, default in (("quantum", "A"), ("hpc", "B")):
        p = model_sub.add_parser(kind, parents=[common], help=f"evaluate a {kind} scenario")
        p.add_argument("--scenario", default=default)
        p.add_argument("--hours", type=_hours_list, default=list(DEFAULT_GRID_H))

    p = sub.add_parser("compare", parents=[common], help="compare two scenarios")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--hours", type=_hours_list, default=list(DEFAULT_GRID_H))

    p = sub.add_parser("sweep", parents=[common], help="impacts over a grid of usage hours")
    p.add_argument("--scenario", action="append", required=True)
    p.add_argument("--grid", type=_hours_list, default=list(DEFAULT_GRID_H))

    p = sub.add_parser("sensitivity", parents=[common], help="A, A', B, B' comparison")
    p.add_argument("--grid", type=_hours_list, default=list(DEFAULT_GRID_H))

    sub.add_parser("crosscheck-table21", parents=[common],
                   help="recompute calculated cells of the blade comparison table")
    return parser


# --- helpers -----------------------------------------------------------------

def display(x: float | None) -> str:
    if x is None:
        return "none"
    if x == 0 or 1e-2 <= abs(x) < 1e15:
        return f"{x:,.2f}" if abs(x) >= 1 or x == 0 else f"{x:.6g}"
    return f"{x:.6g}"


def fact_unit(key: str) -> str:
    for suffix, unit in FACT_UNITS:
        if key.endswith(suffix):
            return unit
    return "count"


def _load(args) -> Dataset:
    ds, diags = load_and_validate(args.dataset)
    for d in diags:
        if d.level != "error":
            print(d, file=sys.stderr)
    if ds is None:
        raise DatasetError(diags)
    return ds


def _scenario(ds: Dataset, sid: str, args) -> Scenario:
    if sid not in ds.scenario_ids:
        raise UsageError(f"unknown scenario {sid!r}; available: {', '.join(ds.scenario_ids)}")
    return ds.scenario(sid, args.replacement_multiplier)


def _engine(ds: Dataset, args) -> Engine:
    if args.method is not None and args.method not in ds.methods:
        raise UsageError(f"unknown method {args.method!r}; available: {', '.join(ds.methods)}")
    return ds.engine(args.method)


def _write(out: Path, name: str, text: str) -> None:
    path = report.write_text(out / name, text)
    print(f"wrote {path}")


def _safe_name(sid: str) -> str:
    return sid.replace("'", "p")


def _facts_csv(models) -> str:
    rows = [(sid, k, float(v), fact_unit(k)) for sid, m in models for k, v in m.facts.items()]
    return report._csv(("scenario", "fact", "value", "unit"), rows)


def _print_phase_table(engine: Engine, sc: Scenario, hours: Sequence[float]) -> None:
    for h in hours:
        totals = aggregate_phases(engine.evaluate(sc, h))
        print(f"\n{sc.id} at {h:,.0f} h")
        print(f"  {'indicator':<16}{'unit':<12}" + "".join(f"{ph.value:>16}" for ph in PHASES) + f"{'total':>16}")
        for ind in INDICATORS:
            cells = "".join(f"{display(totals.phases[ph][ind]):>16}" for ph in PHASES)
            print(f"  {ind.value:<16}{ind.unit:<12}{cells}{display(totals.totals[ind]):>16}")


def _charts_stacked(out: Path, series) -> None:
    for s in series:
        for ind in INDICATORS:
            _write(out, f"phases_{_safe_name(s.scenario)}_{ind.value}.svg", report.stacked_bar_svg(s, ind))


def _charts_lines(out: Path, series) -> None:
    for ind in INDICATORS:
        _write(out, f"compare_{ind.value}.svg", report.line_chart_svg(series, ind))


# --- commands ----------------------------------------------------------------

def cmd_validate(args) -> int:
    ds, diags = load_and_validate(args.dataset)
    for d in diags:
        print(d)
    errors = sum(d.level == "error" for d in diags)
    warnings = len(diags) - errors
    if ds is None:
        print(f"invalid: {errors} error(s), {warnings} warning(s)")
        return EXIT_INVALID
    print(f"ok: {len(ds.flows)} flows, {len(ds.processes)} processes, {len(ds.methods)} method(s), "
          f"{len(ds.scenario_ids)} scenario(s), {warnings} warning(s)")
    return EXIT_OK


def cmd_model(args) -> int:
    ds = _load(args)
    engine = _engine(ds, args)
    sc = _scenario(ds, args.scenario, args)
    cfg = ds.config(args.scenario)
    expected = QuantumConfig if args.kind == "quantum" else HpcConfig
    if not isinstance(cfg, expected):
        raise UsageError(f"scenario {args.scenario!r} is not a {args.kind} scenario")
    print(f"scenario {sc.id} ({args.kind})")
    for k, v in sc.system.facts.items():
        print(f"  {k:<28}{display(float(v)):>20} {fact_unit(k)}")
    _print_phase_table(engine, sc, args.hours)
    results = {sc.id: {h: engine.evaluate(sc, h) for h in args.hours}}
    contrib = {sc.id: engine.contributions(sc)}
    if isinstance(cfg, HpcConfig):
        contrib[f"{sc.id}:{cfg.blade_product}"] = engine.input_breakdown(ds.processes[cfg.blade_product])
    _write(args.out, "facts.csv", _facts_csv([(sc.id, sc.system)]))
    _write(args.out, "phases.csv", report.phase_csv(results))
    _write(args.out, "contributions.csv", report.contribution_csv(contrib))
    _charts_stacked(args.out, [engine.sweep(sc, sorted(args.hours))])
    return EXIT_OK


def cmd_compare(args) -> int:
    ds = _load(args)
    engine = _engine(ds, args)
    a, b = _scenario(ds, args.a, args), _scenario(ds, args.b, args)
    hours = sorted(args.hours)
    for sc in (a, b):
        _print_phase_table(engine, sc, hours)
    rep = engine.crossover_report(a, b)
    print(f"\ncrossovers {a.id} vs {b.id}")
    for ind, c in rep.entries.items():
        print(f"  {ind.value:<16}{display(c.hours):>16} h  ({c.status}; lower before: {c.lower or '-'})")
    results = {sc.id: {h: engine.evaluate(sc, h) for h in hours} for sc in (a, b)}
    _write(args.out, "phases.csv", report.phase_csv(results))
    _write(args.out, "crossovers.csv", report.crossover_csv([rep]))
    series = [engine.sweep(a, hours), engine.sweep(b, hours)]
    _charts_lines(args.out, series)
    return EXIT_OK


def cmd_sweep(args) -> int:
    ds = _load(args)
    engine = _engine(ds, args)
    scenarios = [_scenario(ds, sid, args) for sid in dict.fromkeys(args.scenario)]
    grid = sorted(args.grid)
    series = [engine.sweep(sc, grid) for sc in scenarios]
    for s in series:
        print(f"\n{s.scenario}")
        for ind in INDICATORS:
            vals = "  ".join(f"{h:,.0f} h: {display(v)}" for h, v in zip(s.hours, s.total(ind)))
            print(f"  {ind.value:<16}{ind.unit:<12}{vals}")
    _write(args.out, "sweep.csv", report.sweep_csv(series))
    _charts_stacked(args.out, series)
    if len(series) > 1:
        _charts_lines(args.out, series)
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    ds = _load(args)
    engine = _engine(ds, args)
    scenarios = {sid: _scenario(ds, sid, args) for sid in SENSITIVITY_SET}
    grid = sorted(args.grid)
    res = run_sensitivity(engine, scenarios, grid)
    print("fixed-phase (production + delivery + end of life) ratios")
    for (x, y), ratios in res.fixed_ratios.items():
        cells = "  ".join(f"{ind.value}={ratios[ind]:.3f}" for ind in INDICATORS)
        print(f"  {x:>3} / {y:<3} {cells}")
    print("production-only ratios A'/B")
    prod_ratio = {}
    for ind in INDICATORS:
        pa = res.affine["A'"].fixed[Phase.PRODUCTION][ind]
        pb = res.affine["B"].fixed[Phase.PRODUCTION][ind]
        prod_ratio[ind] = pa / pb if pb else math.nan
    print("  " + "  ".join(f"{ind.value}={prod_ratio[ind]:.3f}" for ind in INDICATORS))
    if res.setup_ratio is not None:
        print(f"QEC setups A'/A: {res.setup_ratio:.2f}")
    print("crossovers")
    for (x, y), rep in res.crossovers.items():
        cells = "  ".join(f"{ind.value}={display(c.hours)}" for ind, c in rep.entries.items())
        print(f"  {x:>3} vs {y:<3} {cells} (h)")

    ratio_rows = [(x, y, ind.value, "fixed_phases", float(r[ind]), "1")
                  for (x, y), r in res.fixed_ratios.items() for ind in INDICATORS]
    ratio_rows += [("A'", "B", ind.value, "production", float(prod_ratio[ind]), "1") for ind in INDICATORS]
    series = [res.sweeps[sid] for sid in SENSITIVITY_SET]
    contrib = {sid: engine.contributions(sc) for sid, sc in scenarios.items()}
    _write(args.out, "facts.csv", _facts_csv([(sid, sc.system) for sid, sc in scenarios.items()]))
    _write(args.out, "sweep.csv", report.sweep_csv(series))
    _write(args.out, "crossovers.csv", report.crossover_csv(res.crossovers.values()))
    _write(args.out, "ratios.csv", report._csv(("x", "y", "indicator", "basis", "ratio", "unit"), ratio_rows))
    _write(args.out, "contributions.csv", report.contribution_csv(contrib))
    _charts_stacked(args.out, series)
    _charts_lines(args.out, series)
    return EXIT_OK


def cmd_crosscheck(args) -> int:
    ds = _load(args)
    sids = [s for s in ds.scenario_ids if isinstance(ds.config(s), HpcConfig)]
    cfg = ds.config("B") if "B" in sids else (ds.config(sids[0]) if sids else HpcConfig())
    rows = table21_crosscheck(cfg)
    print(f"{'machine':<12}{'cell':<26}{'computed':>18}{'expected':>18}{'rel diff':>12}  ok")
    for r in rows:
        print(f"{r.machine:<12}{r.cell:<26}{display(r.computed):>18}{display(r.expected):>18}"
              f"{r.rel_diff:>12.2e}  {'yes' if r.ok else 'NO'}")
    _write(args.out, "crosscheck_table21.csv", report.crosscheck_csv(rows))
    bad = [r for r in rows if not r.ok]
    print(f"{len(rows) - len(bad)}/{len(rows)} cells within 0.5% or equal at printed precision")
    return EXIT_OK if not bad else EXIT_COMPUTE


COMMANDS = {
    "validate": cmd_validate,
    "model": cmd_model,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "sensitivity": cmd_sensitivity,
    "crosscheck-table21": cmd_crosscheck,
}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qclca: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DatasetError as exc:
        print(f"qclca: invalid dataset\n{exc}", file=sys.stderr)
        return EXIT_INVALID
    except (LCIError, ValueError, ArithmeticError) as exc:
        print(f"qclca: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
