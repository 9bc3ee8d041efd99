"""Batch front-end: scenario files, run/sweep/analyze subcommands, exports.

Scenario files are INI-style with one ``[scenario]`` section plus
``[node.<id>]``, ``[node.<id>.kappa]``, ``[node.<id>.eta]`` and
``[node.<id>.controller]`` per slave. All times are seconds as decimals,
the seed is an unsigned integer and mode is ``continuous`` or ``ticks``.

Every output file embeds a reproduction manifest in its comment header so
a trace can be regenerated byte-identically from the manifest alone;
wall-clock runtime is recorded only in the summary JSON, never in the
trace, to keep repeated runs byte-identical.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

from . import __version__, analysis
from .analysis import ConvergenceReport
from .clock import ClockParams, Representation
from .control import ControllerConfig, TheoryPrediction
from .delay import DelayModel
from .netsim import CycleRecord, NodeConfig, ScenarioConfig, SimulationError, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3

TRACE_HEADER = (
    "cycle,node_id,kappa_s,eta_s,timestamp_s,offset_est_s,u_s,"
    "offset_after_s,fire_rel_s,delta_s,collided"
)
SWEEP_PARAMS = ("alpha", "kappa_mean", "eta_mean", "t_d", "seed")


class ConfigError(ValueError):
    """Scenario file or trace file failed validation."""


@dataclass
class RunManifest:
    scenario: str
    seed: int
    num_cycles: int
    mode: str
    guard_window_s: float
    outputs: list[str]
    tool_version: str = __version__
    runtime_s: float | None = None

    def as_dict(self, include_runtime: bool = False) -> dict:
        out = {
            "scenario": self.scenario,
            "seed": self.seed,
            "num_cycles": self.num_cycles,
            "mode": self.mode,
            "guard_window_s": self.guard_window_s,
            "outputs": self.outputs,
            "tool_version": self.tool_version,
        }
        if include_runtime:
            out["runtime_s"] = self.runtime_s
        return out


# ---------------------------------------------------------------------------
# scenario files


def _section_error(section: str, key: str, problem: str) -> ConfigError:
    return ConfigError(f"[{section}] {key}: {problem}")


_REQUIRED = object()


class _Section:
    """One INI section with typed, error-annotated accessors."""

    def __init__(self, name: str, items: dict[str, str], known: set[str]):
        self.name = name
        self.items = items
        unknown = set(items) - known
        if unknown:
            raise _section_error(name, sorted(unknown)[0], "unknown key")

    def get_float(self, key: str, default=_REQUIRED) -> float | None:
        if key not in self.items:
            if default is _REQUIRED:
                raise _section_error(self.name, key, "required key missing")
            return default
        try:
            return float(self.items[key])
        except ValueError:
            raise _section_error(self.name, key, f"not a number: {self.items[key]!r}")

    def get_int(self, key: str, default=_REQUIRED) -> int | None:
        if key not in self.items:
            if default is _REQUIRED:
                raise _section_error(self.name, key, "required key missing")
            return default
        try:
            return int(self.items[key])
        except ValueError:
            raise _section_error(self.name, key, f"not an integer: {self.items[key]!r}")

    def get_bool(self, key: str, default: bool) -> bool:
        raw = self.items.get(key)
        if raw is None:
            return default
        lowered = raw.strip().lower()
        if lowered in ("true", "yes", "on", "1"):
            return True
        if lowered in ("false", "no", "off", "0"):
            return False
        raise _section_error(self.name, key, f"not a boolean: {raw!r}")


def bundled_scenarios() -> dict[str, Path]:
    """Scenario files shipped with the package, keyed by bare name."""
    from importlib import resources

    root = resources.files(__package__) / "scenarios"
    return {p.name.removesuffix(".ini"): Path(str(p)) for p in root.iterdir()
            if p.name.endswith(".ini")}


def resolve_config_path(name_or_path: str) -> Path:
    path = Path(name_or_path)
    if path.exists():
        return path
    bundled = bundled_scenarios()
    if name_or_path in bundled:
        return bundled[name_or_path]
    raise ConfigError(
        f"config {name_or_path!r} not found (bundled: {', '.join(sorted(bundled))})"
    )


def load_scenario(
    name_or_path: str,
    strict: bool = False,
    seed: int | None = None,
    cycles: int | None = None,
) -> tuple[ScenarioConfig, dict, list[str]]:
    """Parse and validate a scenario file.

    Returns the scenario, per-scenario analysis settings and any warnings.
    ``seed``/``cycles`` override the file. With ``strict`` set, gains
    outside the stable region (0, 2) are errors instead of warnings.
    """
    path = resolve_config_path(name_or_path)
    parser = configparser.ConfigParser(interpolation=None,
                                       inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as handle:
            parser.read_file(handle, source=str(path))
    except configparser.Error as err:
        raise ConfigError(str(err))

    warnings: list[str] = []
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    if "scenario" not in sections:
        raise ConfigError("missing [scenario] section")

    scn = _Section("scenario", sections.pop("scenario"),
                   {"cycle_period", "num_cycles", "seed", "mode", "guard_window",
                    "analysis_window", "analysis_tolerance"})
    cycle_period = scn.get_float("cycle_period")
    num_cycles = cycles if cycles is not None else scn.get_int("num_cycles")
    seed_value = seed if seed is not None else scn.get_int("seed")
    if seed_value < 0:
        raise _section_error("scenario", "seed", "must be a non-negative integer")
    mode_raw = scn.items.get("mode", "continuous")
    try:
        mode = Representation(mode_raw)
    except ValueError:
        raise _section_error("scenario", "mode", f"must be continuous|ticks, got {mode_raw!r}")
    guard = scn.get_float("guard_window", 1e-3)
    settings = {
        "window": scn.get_int("analysis_window", analysis.DEFAULT_WINDOW),
        "tolerance": scn.get_float("analysis_tolerance", None),
    }

    node_ids = []
    for name in sections:
        parts = name.split(".")
        if parts[0] != "node" or len(parts) not in (2, 3):
            raise ConfigError(f"unknown section [{name}]")
        if len(parts) == 3 and parts[2] not in ("kappa", "eta", "controller"):
            raise ConfigError(f"unknown section [{name}]")
        if len(parts) == 2:
            node_ids.append(parts[1])
    if not node_ids:
        raise ConfigError("scenario defines no [node.<id>] sections")

    nodes = []
    for node_id in node_ids:
        nodes.append(_parse_node(node_id, sections, mode, cycle_period, strict, warnings))
    leftover = [s for s in sections if s.split(".")[1] not in node_ids]
    if leftover:
        raise ConfigError(f"section [{leftover[0]}] has no matching [node.<id>]")

    try:
        scenario = ScenarioConfig(
            nodes=tuple(nodes),
            cycle_period=cycle_period,
            num_cycles=num_cycles,
            seed=seed_value,
            mode=mode,
            guard_window=guard,
        )
    except ValueError as err:
        raise ConfigError(str(err))
    return scenario, settings, warnings


def _parse_node(node_id, sections, mode, cycle_period, strict, warnings) -> NodeConfig:
    base = _Section(f"node.{node_id}", sections.pop(f"node.{node_id}"),
                    {"initial_offset", "frequency", "cycle_ticks", "threshold",
                     "offset_noise_variance", "skew_ppm"})
    frequency = base.get_float("frequency", 32768.0)
    threshold = base.get_float("threshold", None)
    cycle_ticks = base.get_int("cycle_ticks", 0)
    if not cycle_ticks:
        if threshold is None:
            threshold = cycle_period  # clocks fire once per cycle
        ticks = threshold * frequency
        cycle_ticks = max(1, round(ticks))
        if mode is Representation.TICKS and abs(ticks - cycle_ticks) > 1e-6:
            raise _section_error(base.name, "threshold",
                                 "ticks mode needs a whole number of ticks per cycle")
    if threshold is None:
        threshold = cycle_ticks / frequency
    noise_var = base.get_float("offset_noise_variance", 0.0)
    if noise_var < 0:
        raise _section_error(base.name, "offset_noise_variance", "must be >= 0")

    def delay_section(kind: str) -> DelayModel:
        name = f"node.{node_id}.{kind}"
        if name not in sections:
            raise ConfigError(f"missing section [{name}]")
        sec = _Section(name, sections.pop(name), {"mean", "variance", "floor"})
        variance = sec.get_float("variance", 0.0)
        if variance < 0:
            raise _section_error(name, "variance", "must be >= 0")
        try:
            return DelayModel(sec.get_float("mean"), variance, sec.get_float("floor", 0.0))
        except ValueError as err:
            raise ConfigError(f"[{name}]: {err}")

    kappa = delay_section("kappa")
    eta = delay_section("eta")

    ctrl_name = f"node.{node_id}.controller"
    if ctrl_name not in sections:
        raise ConfigError(f"missing section [{ctrl_name}]")
    ctrl = _Section(ctrl_name, sections.pop(ctrl_name),
                    {"alpha", "slot_reference", "feedforward_enabled", "feedforward",
                     "estimator_kappa"})
    alpha = ctrl.get_float("alpha")
    if not 0.0 < alpha < 2.0:
        message = f"[{ctrl_name}] alpha: {alpha} is outside the stable region (0, 2)"
        if strict:
            raise ConfigError(message)
        warnings.append(f"warning: {message}")
    slot = ctrl.get_float("slot_reference", 0.0)
    if slot >= threshold:
        raise _section_error(ctrl_name, "slot_reference",
                             f"must be < threshold {threshold}")
    try:
        controller = ControllerConfig(
            alpha=alpha,
            slot_reference=slot,
            feedforward_enabled=ctrl.get_bool("feedforward_enabled", False),
            feedforward=ctrl.get_float("feedforward", None),
            estimator_kappa=ctrl.get_float("estimator_kappa", None),
        )
        params = ClockParams(
            nominal_frequency=frequency,
            threshold=threshold,
            cycle_ticks=cycle_ticks,
            offset_noise_variance=noise_var,
            skew_ppm=base.get_float("skew_ppm", 0.0),
        )
        return NodeConfig(
            node_id=node_id,
            clock=params,
            kappa=kappa,
            eta=eta,
            controller=controller,
            initial_offset=base.get_float("initial_offset", 0.0),
        )
    except ValueError as err:
        raise ConfigError(f"[node.{node_id}]: {err}")


# ---------------------------------------------------------------------------
# trace and summary files


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace(path: Path, records: list[CycleRecord], manifest: RunManifest,
                context: dict) -> None:
    """Trace CSV: manifest + analysis context in comments, one row per record."""
    with open(path, "w", newline="") as handle:
        handle.write("# packetsync trace v1\n")
        handle.write(f"# manifest: {json.dumps(manifest.as_dict(), sort_keys=True)}\n")
        handle.write(f"# analysis: {json.dumps(context, sort_keys=True)}\n")
        handle.write(TRACE_HEADER + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        for r in records:
            writer.writerow([
                r.cycle, r.node_id, _fmt(r.kappa_sample), _fmt(r.eta_sample),
                _fmt(r.timestamp), _fmt(r.offset_estimate), _fmt(r.correction),
                _fmt(r.offset_after), _fmt(r.fire_time_rel), _fmt(r.delta),
                "true" if r.collided else "false",
            ])


def read_trace(path: Path) -> tuple[list[CycleRecord], dict, dict]:
    """Parse a trace written by write_trace; errors carry the file row number."""
    records: list[CycleRecord] = []
    manifest: dict = {}
    context: dict = {}
    with open(path, newline="") as handle:
        header_seen = False
        reader = csv.reader(handle)
        for row in reader:
            if not row:
                continue
            if row[0].startswith("#"):
                line = ",".join(row)
                for tag, sink in (("# manifest: ", "manifest"), ("# analysis: ", "analysis")):
                    if line.startswith(tag):
                        try:
                            parsed = json.loads(line[len(tag):])
                        except json.JSONDecodeError as err:
                            raise ConfigError(f"{path}: row {reader.line_num}: bad {sink} JSON: {err}")
                        if sink == "manifest":
                            manifest = parsed
                        else:
                            context = parsed
                continue
            if not header_seen:
                if ",".join(row) != TRACE_HEADER:
                    raise ConfigError(f"{path}: row {reader.line_num}: unexpected header")
                header_seen = True
                continue
            if len(row) != 11:
                raise ConfigError(f"{path}: row {reader.line_num}: expected 11 fields, got {len(row)}")
            try:
                if row[10] not in ("true", "false"):
                    raise ValueError(f"bad collided flag {row[10]!r}")
                records.append(CycleRecord(
                    cycle=int(row[0]), node_id=row[1],
                    kappa_sample=float(row[2]), eta_sample=float(row[3]),
                    timestamp=float(row[4]), offset_estimate=float(row[5]),
                    correction=float(row[6]), offset_after=float(row[7]),
                    fire_time_rel=float(row[8]), delta=float(row[9]),
                    collided=row[10] == "true",
                ))
            except ValueError as err:
                raise ConfigError(f"{path}: row {reader.line_num}: {err}")
    if not header_seen:
        raise ConfigError(f"{path}: no trace header found")
    if not manifest or not context:
        raise ConfigError(f"{path}: missing manifest/analysis header comments")
    return records, manifest, context


def _theory_dict(prediction: TheoryPrediction) -> dict:
    return {
        "eigenvalue": prediction.eigenvalue,
        "asymptote_s": prediction.asymptote,
        "stable": prediction.stable,
    }


def _report_dict(report: ConvergenceReport) -> dict:
    return {
        "converged": report.converged,
        "settling_cycle": report.settling_cycle,
        "steady_mean_s": report.steady_mean,
        "steady_std_s": report.steady_std,
        "max_abs_delta_s": report.max_abs_delta,
        "collision_count": report.collision_count,
    }


def analyze_records(records: list[CycleRecord], context: dict) -> dict:
    """Per-node reports from trace rows plus the embedded analysis context."""
    by_node: dict[str, list[CycleRecord]] = {}
    for r in records:
        by_node.setdefault(r.node_id, []).append(r)
    per_node = {}
    for node_id, rows in sorted(by_node.items()):
        try:
            ctx = context[node_id]
            prediction = TheoryPrediction(
                eigenvalue=ctx["eigenvalue"],
                asymptote=ctx["asymptote_s"],
                stable=ctx["stable"],
            )
            tolerance = ctx["tolerance_s"]
            window = ctx["window"]
        except KeyError as err:
            raise ConfigError(f"analysis context missing {err} for node {node_id!r}")
        report = analysis.analyze(rows, prediction, tolerance, min(window, len(rows)))
        per_node[node_id] = {"theory": _theory_dict(prediction), "report": _report_dict(report)}
    return per_node


# ---------------------------------------------------------------------------
# subcommands


def _execute(scenario: ScenarioConfig, settings: dict, scenario_name: str,
             out_dir: Path, quiet: bool) -> dict:
    """Run one scenario, write trace + summary, return the summary dict."""
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    result = run(scenario)
    manifest = RunManifest(
        scenario=scenario_name,
        seed=scenario.seed,
        num_cycles=scenario.num_cycles,
        mode=scenario.mode.value,
        guard_window_s=scenario.guard_window,
        outputs=["trace.csv", "summary.json"],
    )

    context = {}
    per_node = {}
    for node in scenario.nodes:
        prediction = analysis.node_prediction(node)
        tolerance = settings.get("tolerance") or analysis.default_tolerance(node, scenario.mode)
        window = min(settings.get("window") or analysis.DEFAULT_WINDOW, scenario.num_cycles)
        rows = [r for r in result.records if r.node_id == node.node_id]
        report = analysis.analyze(rows, prediction, tolerance, window)
        context[node.node_id] = {
            **_theory_dict(prediction),
            "tolerance_s": tolerance,
            "window": window,
        }
        per_node[node.node_id] = {
            "theory": _theory_dict(prediction),
            "report": _report_dict(report),
        }

    write_trace(out_dir / "trace.csv", result.records, manifest, context)
    manifest.runtime_s = time.perf_counter() - started
    summary = {
        "scenario": scenario_name,
        "seed": scenario.seed,
        "per_node": per_node,
        "manifest": manifest.as_dict(include_runtime=True),
    }
    with open(out_dir / "summary.json", "w") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")

    if not quiet:
        print(f"wrote {out_dir / 'trace.csv'} ({len(result.records)} records)")
        print(f"wrote {out_dir / 'summary.json'}")
        for node_id, entry in sorted(per_node.items()):
            rep, theory = entry["report"], entry["theory"]
            print(
                f"{node_id}: converged={rep['converged']} "
                f"settling={rep['settling_cycle']} "
                f"steady_mean={rep['steady_mean_s']:.6g} s "
                f"theory={theory['asymptote_s']:.6g} s "
                f"collisions={rep['collision_count']}"
            )
    return summary


def cmd_run(args: argparse.Namespace) -> int:
    scenario, settings, warnings = load_scenario(
        args.config, strict=args.strict, seed=args.seed, cycles=args.cycles
    )
    for line in warnings:
        if not args.quiet:
            print(line, file=sys.stderr)
    _execute(scenario, settings, args.config, Path(args.out), args.quiet)
    return EXIT_OK


def apply_param(scenario: ScenarioConfig, param: str, value: float) -> ScenarioConfig:
    """Scenario copy with one swept parameter replaced on every node."""
    if param == "seed":
        return replace(scenario, seed=int(value))
    nodes = []
    for node in scenario.nodes:
        if param == "alpha":
            node = replace(node, controller=replace(node.controller, alpha=value))
        elif param == "kappa_mean":
            node = replace(node, kappa=replace(node.kappa, mean=value))
        elif param == "eta_mean":
            node = replace(node, eta=replace(node.eta, mean=value))
        elif param == "t_d":
            node = replace(node, controller=replace(node.controller, slot_reference=value))
        else:
            raise ConfigError(f"unknown sweep parameter {param!r}")
        nodes.append(node)
    return replace(scenario, nodes=tuple(nodes))


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario, settings, warnings = load_scenario(
        args.config, strict=args.strict, seed=args.seed, cycles=args.cycles
    )
    for line in warnings:
        if not args.quiet:
            print(line, file=sys.stderr)
    if args.param not in SWEEP_PARAMS:
        raise ConfigError(f"--param must be one of {', '.join(SWEEP_PARAMS)}")
    tokens = [v.strip() for v in args.values.split(",") if v.strip()]
    if not tokens:
        raise ConfigError("--values is empty")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    failures = 0
    for token in tokens:
        try:
            value = int(token) if args.param == "seed" else float(token)
        except ValueError:
            raise ConfigError(f"--values: not a number: {token!r}")
        sub_dir = out_dir / f"{args.param}_{token}"
        try:
            point = apply_param(scenario, args.param, value)
            summary = _execute(point, settings, args.config, sub_dir, args.quiet)
        except (SimulationError, ValueError) as err:
            failures += 1
            print(f"{args.param}={token}: {err}", file=sys.stderr)
            continue
        for node_id, entry in sorted(summary["per_node"].items()):
            rep = entry["report"]
            rows.append([
                token, node_id, _fmt(entry["theory"]["asymptote_s"]),
                _fmt(rep["steady_mean_s"]),
                "" if rep["settling_cycle"] is None else rep["settling_cycle"],
                "true" if rep["converged"] else "false",
            ])

    manifest = RunManifest(
        scenario=args.config, seed=scenario.seed, num_cycles=scenario.num_cycles,
        mode=scenario.mode.value, guard_window_s=scenario.guard_window,
        outputs=["sweep.csv"],
    )
    with open(out_dir / "sweep.csv", "w", newline="") as handle:
        handle.write(f"# packetsync sweep over {args.param}\n")
        handle.write(f"# manifest: {json.dumps(manifest.as_dict(), sort_keys=True)}\n")
        handle.write("value,node_id,asymptote_theory_s,steady_mean_s,settling_cycle,converged\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerows(rows)
    if not args.quiet:
        print(f"wrote {out_dir / 'sweep.csv'} ({len(rows)} rows, {failures} failed sub-runs)")
    return EXIT_SIMULATION if failures else EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    records, manifest, context = read_trace(Path(args.trace))
    if not records:
        raise ConfigError(f"{args.trace}: trace has no records")
    output = {
        "scenario": manifest.get("scenario"),
        "seed": manifest.get("seed"),
        "per_node": analyze_records(records, context),
    }
    print(json.dumps(output, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="packetsync",
        description="Simulate packet-coupled clock synchronization scenarios.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True,
                       help="scenario file path or bundled scenario name")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--cycles", type=int, default=None, help="override the cycle count")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--strict", action="store_true",
                       help="treat out-of-range gains as errors")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    run_p = sub.add_parser("run", help="run one scenario, write trace CSV + summary JSON")
    common(run_p)
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run one scenario once per parameter value")
    common(sweep_p)
    sweep_p.add_argument("--param", required=True, help=f"one of {', '.join(SWEEP_PARAMS)}")
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.set_defaults(func=cmd_sweep)

    analyze_p = sub.add_parser("analyze", help="recompute the summary from a trace CSV")
    analyze_p.add_argument("trace", help="trace CSV written by the run command")
    analyze_p.set_defaults(func=cmd_analyze)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as err:
        print(f"simulation error: {err}", file=sys.stderr)
        return EXIT_SIMULATION
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
