"""Batch front end: one command per invocation, one report per run.

Exit statuses: 0 success, 2 validation error, 3 numerical failure or non-convergence
(the report is still written).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from thermo_formalism.commands import execute
from thermo_formalism.errors import DescriptorError, NumericalError, ThermoInputError
from thermo_formalism.excel_export import build_excel_report
from thermo_formalism.io import COMMAND_PARAMETERS, OUTPUT_FORMATS, load_job_config, parse_job_config
from thermo_formalism.models import JobConfig
from thermo_formalism.reporting import build_report, report_to_csv, report_to_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NOT_CONVERGED = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermo_formalism",
        description="transfer operator の spectral potential, t-entropy と変分原理の数値検証",
    )
    parser.add_argument("--config", required=True, help="ジョブ設定ファイル (.toml / .json / .yaml)")
    parser.add_argument("--output", help="レポートの出力先 (省略時は標準出力)")
    parser.add_argument("--format", choices=OUTPUT_FORMATS, help="レポート形式")
    parser.add_argument("--seed", type=int, help="multi-start 用の乱数 seed")
    parser.add_argument("--n-max", type=int, dest="n_max", help="parameters.n_max を上書き")
    parser.add_argument("--tol", type=float, help="parameters.tol を上書き")
    parser.add_argument("--timing", action="store_true", help="レポートに wall-clock 時間を含める")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug ログを表示")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warning 以上のみ表示")
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def apply_overrides(config: JobConfig, args: argparse.Namespace) -> JobConfig:
    parameters = dict(config.parameters)
    allowed = COMMAND_PARAMETERS[config.command]
    for flag, key in (("n_max", "n_max"), ("tol", "tol")):
        value = getattr(args, flag)
        if value is None:
            continue
        if key not in allowed:
            raise DescriptorError(f"--{flag.replace('_', '-')} は command {config.command} では使えません")
        parameters[key] = value
    updated = replace(config, parameters=parameters)
    if args.seed is not None:
        updated = replace(updated, seed=args.seed)
    if args.output is not None:
        updated = replace(updated, output_path=args.output)
    if args.format is not None:
        updated = replace(updated, output_format=args.format)
    if args.timing:
        updated = replace(updated, timing=True)
    # re-validate the merged config (seed range, multi-start seed requirement)
    return parse_job_config(
        {
            "command": updated.command,
            "seed": updated.seed,
            "system": updated.system,
            "parameters": updated.parameters,
            "output": {
                key: value
                for key, value in (
                    ("path", updated.output_path),
                    ("format", updated.output_format),
                    ("timing", updated.timing),
                )
                if value is not None
            },
        }
    )


def write_report(report: dict, config: JobConfig) -> None:
    if config.output_format == "xlsx":
        if not config.output_path:
            raise DescriptorError("xlsx 形式には output.path (--output) が必要です")
        Path(config.output_path).write_bytes(build_excel_report(report))
        return
    text = report_to_json(report) if config.output_format == "json" else report_to_csv(report)
    if config.output_path:
        Path(config.output_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def run(config: JobConfig) -> int:
    """Execute one job and write its report; returns the exit status."""
    started = time.perf_counter()
    try:
        outcome = execute(config)
    except ThermoInputError as exc:
        logger.error("入力エラー: %s", exc)
        return EXIT_VALIDATION
    except NumericalError as exc:
        logger.error("数値計算エラー (%s): %s", type(exc).__name__, exc)
        report = build_report(config, None, "error", error=f"{type(exc).__name__}: {exc}")
        write_report(report, config)
        return EXIT_NOT_CONVERGED

    elapsed = time.perf_counter() - started
    logger.info("%s: %.3f 秒", config.command, elapsed)
    status = "ok" if outcome.converged else "not_converged"
    report = build_report(config, outcome, status, elapsed_sec=elapsed if config.timing else None)
    write_report(report, config)
    if not outcome.converged:
        logger.warning("%s は収束しませんでした (レポートは出力済み)", config.command)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        config = apply_overrides(load_job_config(args.config), args)
    except ThermoInputError as exc:
        logger.error("設定エラー: %s", exc)
        return EXIT_VALIDATION
    try:
        return run(config)
    except ThermoInputError as exc:
        logger.error("出力エラー: %s", exc)
        return EXIT_VALIDATION
