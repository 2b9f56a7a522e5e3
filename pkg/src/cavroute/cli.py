"""Command-line entry point: ``cavroute run | compare | validate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .coordination import SafetyViolation
from .network import (ScenarioParseError, ScenarioValidationError, apply_overrides,
                      parse_scenario, read_scenario_document, scenario_hash, scenario_to_dict)
from .simengine import CONTROLLERS, MetricsReport, run, write_outputs

EXIT_OK = 0
EXIT_IO = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4

log = logging.getLogger(__name__)


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def shipped_scenarios() -> List[str]:
    root = resources.files(__package__) / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_scenario(name: str) -> Path:
    """A file path, or the name of a shipped scenario (``diamond``, ``diamond.json``)."""
    path = Path(name)
    if path.exists():
        return path
    stem = name[:-5] if name.endswith(".json") else name
    if "/" not in name and stem in shipped_scenarios():
        return Path(str(resources.files(__package__) / "scenarios" / f"{stem}.json"))
    raise CliError(EXIT_PARSE, f"scenario file not found: {name}")


def parse_overrides(items: Sequence[str]) -> Dict[str, object]:
    """``key=value`` pairs; values are read as JSON when possible."""
    out = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise CliError(EXIT_PARSE, f"override '{item}' is not key=value")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _known_keys(doc: dict, prefix: str = "") -> set:
    keys = set()
    for k, v in doc.items():
        if isinstance(v, dict):
            keys |= _known_keys(v, f"{prefix}{k}.")
        else:
            keys.add(f"{prefix}{k}")
    return keys


def load_effective(scenario: str, overrides: Dict[str, object], seed: Optional[int] = None):
    """Scenario document with overrides applied, and its parsed Scenario."""
    path = resolve_scenario(scenario)
    try:
        doc = read_scenario_document(path)
        base = parse_scenario(doc)
    except ScenarioParseError as exc:
        raise CliError(EXIT_PARSE, str(exc)) from None
    except ScenarioValidationError as exc:
        raise CliError(EXIT_VALIDATION, _problems(exc)) from None
    # every config key has a default, so the serialized form lists them all
    known = _known_keys({k: v for k, v in scenario_to_dict(base).items()
                         if k in ("routing", "coordination", "simulation")})
    if seed is not None:
        overrides = dict(overrides, **{"simulation.seed": seed})
    for key in overrides:
        if key not in known:
            raise CliError(EXIT_PARSE, f"override '{key}' does not name a config key")
    doc = apply_overrides(doc, overrides)
    try:
        return doc, parse_scenario(doc)
    except ScenarioParseError as exc:
        raise CliError(EXIT_PARSE, str(exc)) from None
    except ScenarioValidationError as exc:
        raise CliError(EXIT_VALIDATION, _problems(exc)) from None


def _problems(exc: ScenarioValidationError) -> str:
    return "invalid scenario:\n" + "\n".join(f"  - {p}" for p in exc.problems)


def execute(doc: dict, scenario, controller: str, out: Optional[Path],
            dump_trajectories: bool = False) -> MetricsReport:
    try:
        report, world = run(scenario, controller, dump_trajectories=dump_trajectories)
    except SafetyViolation as exc:
        raise CliError(EXIT_RUNTIME, f"safety violation: {exc}") from None
    if out is not None:
        header = {"scenario": scenario.name, "scenario_hash": scenario_hash(doc),
                  "controller": controller, "seed": world.config.seed,
                  "config": doc}
        try:
            write_outputs(report, world, out, header)
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot write outputs to {out}: {exc}") from None
    return report


def improvement(baseline: float, proposed: float) -> float:
    """Relative improvement in percent, ``(baseline - proposed) / baseline``."""
    if baseline == 0:
        return 0.0 if proposed == 0 else float("-inf")
    return 100.0 * (baseline - proposed) / baseline


COMPARE_ROWS = (("TTT [s]", "ttt_s"), ("TD [s]", "total_delay_s"),
                ("energy proxy", "energy_proxy"),
                ("edge-time above k_c [s]", "edge_time_above_critical_s"))


def comparison_rows(base: dict, prop: dict) -> List[Tuple[str, float, float, float]]:
    return [(label, base[key], prop[key], improvement(base[key], prop[key]))
            for label, key in COMPARE_ROWS]


def format_comparison(rows, base_name="baseline", prop_name="proposed") -> str:
    lines = [f"{'metric':<26}{base_name:>14}{prop_name:>14}{'improvement':>14}"]
    for label, b, p, imp in rows:
        lines.append(f"{label:<26}{b:>14.2f}{p:>14.2f}{imp:>13.2f}%")
    return "\n".join(lines)


def cmd_run(args) -> int:
    doc, scenario = load_effective(args.scenario, parse_overrides(args.set), args.seed)
    out = Path(args.out)
    report = execute(doc, scenario, args.controller, out, args.dump_trajectories)
    s = report.summary()
    # adding 0.0 turns a rounded -0.0 into 0.0
    print(f"{scenario.name} [{args.controller}]: TTT {round(s['ttt_s'], 2) + 0.0:.2f} s, TD "
          f"{round(s['total_delay_s'], 2) + 0.0:.2f} s, completed {s['completed']}, "
          f"incomplete {s['incomplete']} -> {out}")
    return EXIT_OK


def _read_run(path: Path) -> Tuple[dict, dict]:
    try:
        metrics = json.loads((path / "metrics.json").read_text())
        header = json.loads((path / "run.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_PARSE, f"cannot read run directory {path}: {exc}") from None
    return metrics, header


def cmd_compare(args) -> int:
    if args.runs:
        (mb, hb), (mp, hp) = (_read_run(Path(p)) for p in args.runs)
        if hb["scenario_hash"] != hp["scenario_hash"]:
            raise CliError(EXIT_VALIDATION, "runs use different scenarios "
                           f"({hb['scenario_hash'][:12]} vs {hp['scenario_hash'][:12]})")
        rows = comparison_rows(mb, mp)
        print(format_comparison(rows, hb["controller"], hp["controller"]))
        return EXIT_OK
    if not args.scenario:
        raise CliError(EXIT_PARSE, "compare needs --scenario or --runs")
    doc, scenario = load_effective(args.scenario, parse_overrides(args.set), args.seed)
    out = Path(args.out) if args.out else None
    summaries = {}
    for controller in CONTROLLERS:
        sub = out / controller if out else None
        summaries[controller] = execute(doc, scenario, controller, sub).summary()
    rows = comparison_rows(summaries["baseline"], summaries["proposed"])
    print(format_comparison(rows))
    if out is not None:
        table = {label: {"baseline": b, "proposed": p, "improvement_pct": imp}
                 for label, b, p, imp in rows}
        (out / "comparison.json").write_text(json.dumps(table, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def cmd_validate(args) -> int:
    target = args.path or args.scenario
    if not target:
        raise CliError(EXIT_PARSE, "validate needs a scenario path")
    path = resolve_scenario(target)
    try:
        scenario = parse_scenario(read_scenario_document(path))
    except ScenarioParseError as exc:
        raise CliError(EXIT_PARSE, str(exc)) from None
    except ScenarioValidationError as exc:
        raise CliError(EXIT_VALIDATION, _problems(exc)) from None
    print(f"{path}: valid ({len(scenario.graph.nodes)} nodes, {len(scenario.graph.edges)} "
          f"edges, {len(scenario.zones)} zones, {len(scenario.demand)} vehicles)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cavroute", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key, e.g. routing.gamma_w=0")

    r = sub.add_parser("run", help="simulate one scenario under one controller")
    r.add_argument("--scenario", required=True, help="file path or shipped scenario name")
    r.add_argument("--controller", choices=CONTROLLERS, default="proposed")
    r.add_argument("-o", "--out", default="out")
    r.add_argument("--dump-trajectories", action="store_true")
    common(r)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="baseline vs proposed on one scenario")
    c.add_argument("--scenario")
    c.add_argument("--runs", nargs=2, metavar=("BASELINE_DIR", "PROPOSED_DIR"),
                   help="compare two finished run directories instead")
    c.add_argument("-o", "--out")
    common(c)
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("validate", help="check a scenario file and list every problem")
    v.add_argument("path", nargs="?")
    v.add_argument("--scenario")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"cavroute: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
