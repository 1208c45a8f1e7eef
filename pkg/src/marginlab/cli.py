"""Command-line front end: one YAML config, five subcommands.

    marginlab calibrate    fit the device model, write the fit report
    marginlab characterize run the failure-onset campaign, write CSVs
    marginlab energy       run the energy grid, write CSVs + savings
    marginlab control      run seeded controller episodes, write CSVs
    marginlab report       re-derive summaries from existing CSVs

Every command is deterministic given (config, seed): outputs carry a
provenance comment with the tool version, config hash, and seed, and
reruns produce byte-identical files.  Exit codes: 0 success, 1 runtime
failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

import yaml

from .backend import SimulatedBackend
from .calibration import CalibrationTargets, calibrate
from .constants import DEFAULT_WORKLOAD_SEED
from .controller import ControllerConfig, episode_seed, run_episode
from .energy import (
    DEFAULT_ENERGY_FREQS_KHZ,
    DEFAULT_ENERGY_WORKLOAD,
    energy_sweep,
    iso_performance_savings,
)
from .errors import ConfigError, MarginLabError, NoFailuresObserved
from .model import DATASHEET_GUARDBANDS, SUPPLY_STEPS_MV
from .reports import (
    RecordCsvWriter,
    calibration_report_text,
    config_hash,
    episode_summary_text,
    provenance_line,
    read_energy_csv,
    read_records_csv,
    savings_report_text,
    write_energy_csv,
    write_episode_csv,
    write_savings_csv,
    write_summary_csv,
    write_trace_csv,
)
from .sweep import (
    FixedCeiling,
    StopOnFirstLockup,
    SweepPlan,
    execute_plan,
    summarize,
)
from .workloads import ParallelWorkloadSpec


@dataclass(frozen=True)
class CampaignConfig:
    campaign_seed: int
    output_dir: Path
    targets: CalibrationTargets
    plan: SweepPlan
    workload_seed: int
    energy_voltages: tuple[int, ...]
    energy_freqs: tuple[int, ...]
    energy_workload: ParallelWorkloadSpec
    controller: ControllerConfig
    episodes: int
    duration_windows: int
    digest: str


def _expect_mapping(node: Any, path: str) -> dict:
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ConfigError(path, f"expected a mapping, got {type(node).__name__}")
    return node


def _int_list(node: Any, path: str) -> tuple[int, ...]:
    """A grid axis: either an explicit list or {start, stop, step}."""
    if isinstance(node, dict):
        for key in node:
            if key not in ("start", "stop", "step"):
                raise ConfigError(f"{path}.{key}", "unknown range field")
        try:
            start, stop, step = int(node["start"]), int(node["stop"]), int(node["step"])
        except KeyError as exc:
            raise ConfigError(path, f"range needs start/stop/step, missing {exc}") from None
        if step < 1:
            raise ConfigError(f"{path}.step", "step must be positive")
        return tuple(range(start, stop + 1, step))
    if isinstance(node, list):
        if not all(isinstance(x, int) and not isinstance(x, bool) for x in node):
            raise ConfigError(path, "expected a list of integers")
        return tuple(node)
    raise ConfigError(path, "expected a list or a start/stop/step mapping")


def _build_targets(node: Any) -> CalibrationTargets:
    node = _expect_mapping(node, "model")
    overrides = dict(_expect_mapping(node.get("targets"), "model.targets"))
    if "targets_file" in node:
        path = Path(node["targets_file"])
        if not path.is_file():
            raise ConfigError("model.targets_file", f"no such file: {path}")
        loaded = _expect_mapping(
            yaml.safe_load(path.read_text()), "model.targets_file"
        )
        overrides = {**loaded, **overrides}
    valid = {f.name for f in fields(CalibrationTargets)}
    for key in overrides:
        if key not in valid:
            raise ConfigError(f"model.targets.{key}", "unknown calibration target")
    try:
        return CalibrationTargets(**overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError("model.targets", str(exc)) from None


def _build_plan(node: Any) -> SweepPlan:
    node = _expect_mapping(node, "sweep")
    kwargs: dict[str, Any] = {}
    if "voltages_mv" in node:
        kwargs["voltages_mv"] = _int_list(node["voltages_mv"], "sweep.voltages_mv")
    else:
        kwargs["voltages_mv"] = SUPPLY_STEPS_MV
    for key in ("start_freq_khz", "freq_step_khz", "repetitions"):
        if key in node:
            kwargs[key] = node[key]
    if "sizes" in node:
        kwargs["sizes"] = _int_list(node["sizes"], "sweep.sizes")
    if "stop_rule" in node:
        rule = node["stop_rule"]
        if rule == "stop_on_first_lockup":
            kwargs["stop_rule"] = StopOnFirstLockup()
        elif isinstance(rule, dict) and set(rule) == {"fixed_ceiling_khz"}:
            kwargs["stop_rule"] = FixedCeiling(int(rule["fixed_ceiling_khz"]))
        else:
            raise ConfigError(
                "sweep.stop_rule",
                "expected 'stop_on_first_lockup' or {fixed_ceiling_khz: N}",
            )
    try:
        return SweepPlan(**kwargs)
    except (MarginLabError, TypeError, ValueError) as exc:
        raise ConfigError("sweep", str(exc)) from None


def _build_energy(node: Any) -> tuple[tuple[int, ...], tuple[int, ...], ParallelWorkloadSpec]:
    node = _expect_mapping(node, "energy")
    voltages = (
        _int_list(node["voltages_mv"], "energy.voltages_mv")
        if "voltages_mv" in node
        else SUPPLY_STEPS_MV
    )
    freqs = (
        _int_list(node["freqs_khz"], "energy.freqs_khz")
        if "freqs_khz" in node
        else DEFAULT_ENERGY_FREQS_KHZ
    )
    if not voltages or not freqs:
        raise ConfigError("energy", "voltage and frequency grids must be non-empty")
    workload = DEFAULT_ENERGY_WORKLOAD
    if "workload" in node:
        w = _expect_mapping(node["workload"], "energy.workload")
        try:
            workload = ParallelWorkloadSpec(
                n_cores=w.get("n_cores", DEFAULT_ENERGY_WORKLOAD.n_cores),
                total_cycles=w.get("total_cycles", DEFAULT_ENERGY_WORKLOAD.total_cycles),
            )
        except (MarginLabError, ValueError) as exc:
            raise ConfigError("energy.workload", str(exc)) from None
    return voltages, freqs, workload


def _build_controller(node: Any) -> tuple[ControllerConfig, int, int]:
    node = _expect_mapping(node, "controller")
    episodes = node.get("episodes", 100)
    duration = node.get("duration_windows", 12)
    if not isinstance(episodes, int) or episodes < 1:
        raise ConfigError("controller.episodes", "must be a positive integer")
    if not isinstance(duration, int) or duration < 1:
        raise ConfigError("controller.duration_windows", "must be a positive integer")
    kwargs: dict[str, Any] = {"target_freq_khz": node.get("target_freq_khz", 170_000)}
    for key in (
        "window_runs",
        "run_cycles",
        "recovery_cost_cycles",
        "settle_windows",
        "safety_margin_khz",
        "start_voltage_mv",
    ):
        if key in node:
            kwargs[key] = node[key]
    if "error_rate_bounds" in node:
        bounds = node["error_rate_bounds"]
        if not (isinstance(bounds, list) and len(bounds) == 2):
            raise ConfigError("controller.error_rate_bounds", "expected [lo, hi]")
        kwargs["error_rate_bounds"] = (float(bounds[0]), float(bounds[1]))
    try:
        return ControllerConfig(**kwargs), episodes, duration
    except (TypeError, ValueError) as exc:
        raise ConfigError("controller", str(exc)) from None


def load_config(
    config_path: str | None,
    seed_override: int | None = None,
    out_override: str | None = None,
) -> CampaignConfig:
    raw: dict = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError("config", f"no such file: {path}")
        try:
            loaded = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError("config", f"invalid YAML: {exc}") from None
        raw = _expect_mapping(loaded, "config")
    for key in raw:
        if key not in (
            "campaign_seed",
            "workload_seed",
            "output_dir",
            "model",
            "sweep",
            "energy",
            "controller",
        ):
            raise ConfigError(key, "unknown config section")

    seed = seed_override if seed_override is not None else raw.get("campaign_seed", 1)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("campaign_seed", "must be a non-negative integer")
    workload_seed = raw.get("workload_seed", DEFAULT_WORKLOAD_SEED)
    if not isinstance(workload_seed, int) or workload_seed < 1:
        raise ConfigError("workload_seed", "must be a positive integer")
    out = Path(out_override if out_override is not None else raw.get("output_dir", "out"))

    targets = _build_targets(raw.get("model"))
    plan = _build_plan(raw.get("sweep"))
    energy_voltages, energy_freqs, energy_workload = _build_energy(raw.get("energy"))
    controller, episodes, duration = _build_controller(raw.get("controller"))

    digest = config_hash({"config": raw, "seed": seed})
    return CampaignConfig(
        campaign_seed=seed,
        output_dir=out,
        targets=targets,
        plan=plan,
        workload_seed=workload_seed,
        energy_voltages=energy_voltages,
        energy_freqs=energy_freqs,
        energy_workload=energy_workload,
        controller=controller,
        episodes=episodes,
        duration_windows=duration,
        digest=digest,
    )


def _params_for(cfg: CampaignConfig):
    return calibrate(DATASHEET_GUARDBANDS, cfg.targets)


def _provenance(cfg: CampaignConfig) -> str:
    return provenance_line(cfg.digest, cfg.campaign_seed)


def cmd_calibrate(cfg: CampaignConfig, args: argparse.Namespace) -> int:
    params = _params_for(cfg)
    report = calibration_report_text(params, cfg.targets, DATASHEET_GUARDBANDS)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.output_dir / "calibration.txt"
    out.write_text(report)
    sys.stdout.write(report)
    print(f"wrote {out}")
    return 0


def cmd_characterize(cfg: CampaignConfig, args: argparse.Namespace) -> int:
    params = _params_for(cfg)
    backend = SimulatedBackend(params)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    records_path = cfg.output_dir / "records.csv"
    with open(records_path, "w", newline="") as stream:
        sink = RecordCsvWriter(stream, _provenance(cfg))
        records = execute_plan(
            backend,
            cfg.plan,
            cfg.campaign_seed,
            workload_seed=cfg.workload_seed,
            sink=sink,
            workers=args.workers,
        )
    print(f"wrote {records_path} ({len(records)} records)")
    try:
        summary = summarize(records)
    except NoFailuresObserved:
        print("no failures observed; summary not written")
        return 0
    summary_path = cfg.output_dir / "summary.csv"
    with open(summary_path, "w", newline="") as stream:
        write_summary_csv(stream, summary, DATASHEET_GUARDBANDS, _provenance(cfg))
    print(f"wrote {summary_path}")
    for row in summary.rows:
        first_err = (
            f"{row.first_error_khz / 1000:.0f} MHz"
            if row.first_error_khz is not None
            else "none"
        )
        first_lock = (
            f"{row.first_lockup_khz / 1000:.0f} MHz"
            if row.first_lockup_khz is not None
            else "none"
        )
        print(
            f"  {row.voltage_mv} mV: first error {first_err}, "
            f"first lockup {first_lock}"
        )
    return 0


def cmd_energy(cfg: CampaignConfig, args: argparse.Namespace) -> int:
    params = _params_for(cfg)
    backend = SimulatedBackend(params)
    records = energy_sweep(
        backend,
        cfg.energy_workload,
        cfg.energy_voltages,
        cfg.energy_freqs,
        cfg.campaign_seed,
    )
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    energy_path = cfg.output_dir / "energy.csv"
    with open(energy_path, "w", newline="") as stream:
        write_energy_csv(stream, records, _provenance(cfg))
    print(f"wrote {energy_path} ({len(records)} records)")
    report = iso_performance_savings(records, DATASHEET_GUARDBANDS)
    savings_path = cfg.output_dir / "savings.csv"
    with open(savings_path, "w", newline="") as stream:
        write_savings_csv(stream, report, _provenance(cfg))
    text = savings_report_text(report)
    (cfg.output_dir / "savings.txt").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_control(cfg: CampaignConfig, args: argparse.Namespace) -> int:
    params = _params_for(cfg)
    reports = [
        run_episode(
            params,
            cfg.controller,
            episode_seed(cfg.campaign_seed, i),
            cfg.duration_windows,
        )
        for i in range(cfg.episodes)
    ]
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    episodes_path = cfg.output_dir / "episodes.csv"
    with open(episodes_path, "w", newline="") as stream:
        write_episode_csv(stream, reports, _provenance(cfg))
    trace_path = cfg.output_dir / "trace.csv"
    with open(trace_path, "w", newline="") as stream:
        write_trace_csv(stream, reports[0].trace, _provenance(cfg))
    text = episode_summary_text(reports)
    (cfg.output_dir / "control.txt").write_text(text)
    sys.stdout.write(text)
    print(f"wrote {episodes_path}, {trace_path}")
    return 0


def cmd_report(cfg: CampaignConfig, args: argparse.Namespace) -> int:
    """Offline re-analysis of a finished campaign's CSVs."""
    did_anything = False
    records_path = cfg.output_dir / "records.csv"
    if records_path.is_file():
        with open(records_path) as stream:
            records = read_records_csv(stream)
        try:
            summary = summarize(records)
        except NoFailuresObserved:
            print(f"{records_path}: no failures observed")
        else:
            summary_path = cfg.output_dir / "summary.csv"
            with open(summary_path, "w", newline="") as stream:
                write_summary_csv(
                    stream, summary, DATASHEET_GUARDBANDS, _provenance(cfg)
                )
            print(f"wrote {summary_path}")
        did_anything = True
    energy_path = cfg.output_dir / "energy.csv"
    if energy_path.is_file():
        with open(energy_path) as stream:
            records = read_energy_csv(stream)
        report = iso_performance_savings(records, DATASHEET_GUARDBANDS)
        savings_path = cfg.output_dir / "savings.csv"
        with open(savings_path, "w", newline="") as stream:
            write_savings_csv(stream, report, _provenance(cfg))
        sys.stdout.write(savings_report_text(report))
        did_anything = True
    if not did_anything:
        print(
            f"nothing to report: no records.csv or energy.csv under "
            f"{cfg.output_dir}",
            file=sys.stderr,
        )
        return 1
    return 0


_COMMANDS = {
    "calibrate": cmd_calibrate,
    "characterize": cmd_characterize,
    "energy": cmd_energy,
    "control": cmd_control,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marginlab",
        description="Guardband-violation exploration against a calibrated device model",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__ or name)
        p.add_argument("--config", metavar="PATH", help="YAML campaign config")
        p.add_argument(
            "--seed", type=int, metavar="U64", help="override campaign seed"
        )
        p.add_argument(
            "--workers",
            type=int,
            default=os.cpu_count() or 1,
            metavar="N",
            help="max concurrent voltages (default: CPU count)",
        )
        p.add_argument("--out", metavar="DIR", help="override output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.seed, args.out)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MarginLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
