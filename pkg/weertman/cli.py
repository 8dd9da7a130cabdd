from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable

from weertman.acceptance import run_acceptance
from weertman.config import RunConfig, build_manifest, parse_config, parse_overrides
from weertman.errors import ConfigError
from weertman.output import (
    ACCEPTANCE_CSV,
    MANIFEST_JSON,
    OPERATOR_CSV,
    REPORT_JSON,
    SQUEEZE_JSON,
    load_run,
    save_run,
    write_csv,
    write_json,
)
from weertman.pipeline import (
    build_problem,
    describe_problem,
    evolve_summary,
    run_analyze,
    run_evolve,
    run_operator_check,
    run_squeeze,
)
from weertman.storage import RunRepository

LogCallback = Callable[[str], None]

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_STAGE = 3

COMMAND_STAGES = {
    "evolve": ("evolve",),
    "analyze": ("analyze",),
    "squeeze-test": ("evolve", "squeeze"),
}


def _make_logger(repo: RunRepository, run_id: str, callback: LogCallback | None) -> LogCallback:
    def log(message: str) -> None:
        repo.log_run(run_id, message)
        if callback:
            callback(message)

    return log


def _finish(
    repo: RunRepository,
    run_id: str,
    exit_code: int,
    failed_stage: str | None = None,
) -> int:
    status = "completed" if exit_code == EXIT_OK else "failed"
    repo.finish_run(run_id, status=status, exit_code=exit_code, failed_stage=failed_stage)
    return exit_code


def _fail(repo: RunRepository, run_id: str, stage: str, exc: BaseException, callback: LogCallback | None) -> int:
    message = f"{stage} failed: {exc}"
    repo.log_run(run_id, message, level="ERROR")
    print(message, file=sys.stderr)
    code = EXIT_CONFIG if isinstance(exc, ConfigError) else EXIT_STAGE
    return _finish(repo, run_id, code, stage)


def run_pipeline(
    cfg: RunConfig,
    repo: RunRepository | None = None,
    logger: LogCallback | None = None,
    command: str = "pipeline",
) -> int:
    """evolve -> analyze -> squeeze as listed in ``cfg.stages``; returns the exit code.

    A stage that is not run reads what it needs from the output directory.
    """
    out = Path(cfg.out_dir)
    repo = repo or RunRepository(out / "runs.db")
    run_id = repo.create_run(command, cfg.to_dict(), out)
    log = _make_logger(repo, run_id, logger)
    log(f"{command} 시작: stages={','.join(cfg.stages)} out={out}")

    stage = "config"
    try:
        problem = build_problem(cfg)
        write_json(build_manifest(cfg, command, describe_problem(problem)), out / MANIFEST_JSON)

        report_payload: dict[str, Any] = {}
        failures: list[str] = []
        wave = None

        if "evolve" in cfg.stages:
            stage = "evolve"
            evolved = run_evolve(cfg, problem, log)
            save_run(out, evolved.state, evolved.report)
            state, report, wave = evolved.state, evolved.report, evolved.wave
            report_payload.update(evolve_summary(evolved))
        else:
            stage = "load"
            state, report = load_run(out)
            log(f"loaded run from {out}: t={state.t:.6g} samples={len(report.times)}")

        if "analyze" in cfg.stages:
            stage = "analyze"
            analyzed, wave = run_analyze(cfg, problem.potential, state, report, log)
            report_payload.update(analyzed.summary)
            failures.extend(analyzed.failures)

        if "squeeze" in cfg.stages:
            stage = "squeeze"
            if wave is None:
                _, wave = run_analyze(replace(cfg, require_rate_fit=False), problem.potential, state, report)
            squeezed = run_squeeze(cfg, problem, wave, log)
            report_payload.update(squeezed.summary)
            failures.extend(squeezed.failures)
            write_json({**squeezed.summary, "passed": not squeezed.failures}, out / SQUEEZE_JSON)

        stage = "report"
        report_payload["passed"] = not failures
        report_payload["failed_assertions"] = "; ".join(failures)
        write_json(report_payload, out / REPORT_JSON)
    except Exception as exc:  # pylint: disable=broad-except
        return _fail(repo, run_id, stage, exc, logger)

    for failure in failures:
        repo.log_run(run_id, f"assertion failed: {failure}", level="ERROR")
    log(f"{command} 완료: {'통과' if not failures else f'실패 {len(failures)}건'}")
    return _finish(repo, run_id, EXIT_OK if not failures else EXIT_ASSERTION)


def cmd_operator_check(cfg: RunConfig, repo: RunRepository, logger: LogCallback | None) -> int:
    out = Path(cfg.out_dir)
    run_id = repo.create_run("operator-check", cfg.to_dict(), out)
    log = _make_logger(repo, run_id, logger)
    try:
        problem = build_problem(cfg)
        write_json(build_manifest(cfg, "operator-check", describe_problem(problem)), out / MANIFEST_JSON)
        table, worst = run_operator_check(cfg, problem, log)
        write_csv(table, out / OPERATOR_CSV)
    except Exception as exc:  # pylint: disable=broad-except
        return _fail(repo, run_id, "operator-check", exc, logger)
    if worst > cfg.operator_limit():
        repo.log_run(run_id, f"max abs_err {worst:.3e} exceeds {cfg.operator_limit():.3e}", level="ERROR")
        return _finish(repo, run_id, EXIT_ASSERTION)
    return _finish(repo, run_id, EXIT_OK)


def cmd_acceptance(cfg: RunConfig, repo: RunRepository, logger: LogCallback | None) -> int:
    out = Path(cfg.out_dir)
    run_id = repo.create_run("all-acceptance", cfg.to_dict(), out)
    log = _make_logger(repo, run_id, logger)
    try:
        write_json(build_manifest(cfg, "all-acceptance"), out / MANIFEST_JSON)
        table = run_acceptance(cfg, log)
        write_csv(table, out / ACCEPTANCE_CSV)
    except Exception as exc:  # pylint: disable=broad-except
        return _fail(repo, run_id, "all-acceptance", exc, logger)
    failed = table.loc[~table["passed"], "name"].tolist()
    for name in failed:
        repo.log_run(run_id, f"acceptance failed: {name}", level="ERROR")
    log(f"acceptance: {len(table) - len(failed)}/{len(table)} passed")
    return _finish(repo, run_id, EXIT_OK if not failed else EXIT_ASSERTION)


def cmd_runs(repo: RunRepository, run_id: str | None, status: str | None, limit: int) -> int:
    if run_id:
        run = repo.get_run(run_id)
        if not run:
            print(f"Run {run_id} not found.")
            return 1
        print(f"{run['run_id']} | {run['command']} | {run['status']} | exit={run['exit_code']}")
        for entry in repo.get_run_logs(run_id, limit=limit):
            print(f"{entry['created_at']} [{entry['level']}] {entry['message']}")
        return 0

    runs = repo.list_recent_runs(limit=limit, status=status)
    if not runs:
        print("No runs found.")
        return 0
    for run in runs:
        stage = f" | stage={run['failed_stage']}" if run["failed_stage"] else ""
        print(
            f"{run['run_id']} | {run['command']} | {run['status']} | exit={run['exit_code']} "
            f"| {run['started_at']}{stage}"
        )
    return 0


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", help="Output directory (overrides out_dir)")
    parser.add_argument("--seed", type=int, help="Seed for randomized suites (overrides seed)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")


def load_config(args: argparse.Namespace, stages: tuple[str, ...] | None = None) -> RunConfig:
    overrides: dict[str, Any] = dict(parse_overrides(args.overrides))
    if args.out:
        overrides["out_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if stages is not None:
        overrides["stages"] = list(stages)
    return parse_config(args.config, overrides)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Traveling waves of the half-Laplacian bistable equation.")
    parser.add_argument("--db-path", help="SQLite run ledger (default <out>/runs.db)")
    parser.add_argument("--quiet", action="store_true", help="Do not echo log lines to stdout")

    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in ("evolve", "analyze", "operator-check", "squeeze-test", "all-acceptance", "pipeline"):
        _add_run_flags(subparsers.add_parser(name))

    runs_parser = subparsers.add_parser("runs")
    runs_parser.add_argument("--out", default="output")
    runs_parser.add_argument("--run-id")
    runs_parser.add_argument("--status", choices=("running", "completed", "failed"))
    runs_parser.add_argument("--limit", type=int, default=30)

    args = parser.parse_args(argv)
    logger = None if args.quiet else print

    if args.command == "runs":
        repo = RunRepository(args.db_path or Path(args.out) / "runs.db")
        return cmd_runs(repo, args.run_id, args.status, args.limit)

    try:
        cfg = load_config(args, COMMAND_STAGES.get(args.command))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    repo = RunRepository(args.db_path or Path(cfg.out_dir) / "runs.db")
    if args.command == "operator-check":
        return cmd_operator_check(cfg, repo, logger)
    if args.command == "all-acceptance":
        return cmd_acceptance(cfg, repo, logger)
    return run_pipeline(cfg, repo, logger, command=args.command)


if __name__ == "__main__":
    raise SystemExit(main())
