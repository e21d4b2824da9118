# ruff: noqa: T201
import argparse
import logging
import sys
import types
from collections.abc import Sequence
from pathlib import Path
from typing import Any, get_args, get_origin

from src.core.errors import BoundaryExplorerError, NoCounterfactualsError
from src.core.pipeline_config import PipelineConfig
from src.core.service.boundary_pipeline import BoundaryPipeline
from src.core.storage.config_storage import ConfigStorage
from src.ui.io import IO

logger = logging.getLogger("main")

EXIT_OK = 0
EXIT_PIPELINE_ERROR = 1
EXIT_VALIDATION_FAILED = 2
EXIT_NO_COUNTERFACTUALS = 3

# Флаги с собственными именами вместо автоматических --<key>
_RENAMED_FLAGS = {"output_dir": "--out"}


def _configure_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.StreamHandler(),
        ],
    )


def _override_type(annotation: Any) -> tuple[Any, str | None]:
    """Тип значения флага и nargs по аннотации поля конфигурации."""
    if get_origin(annotation) in (types.UnionType,):
        annotation = next(arg for arg in get_args(annotation) if arg is not type(None))
    if get_origin(annotation) is list:
        return get_args(annotation)[0], "+"
    return annotation, None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boundary-explorer",
        description="Поиск границ решений чёрного ящика с помощью RL и извлечение правил.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("list-systems", help="список встроенных систем")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML-файл конфигурации")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v: INFO, -vv: DEBUG")
    common.add_argument("--no-progress", action="store_true", help="без индикаторов прогресса")
    overrides = common.add_argument_group("параметры (переопределяют конфигурацию)")
    for field_name, annotation in PipelineConfig.__annotations__.items():
        value_type, nargs = _override_type(annotation)
        flag = _RENAMED_FLAGS.get(field_name, "--" + field_name.replace("_", "-"))
        overrides.add_argument(flag, dest=field_name, type=value_type, nargs=nargs, default=None)

    for name, help_text in (
            ("train", "обучить агента"),
            ("analyze", "собрать контрфактические переходы и извлечь правила"),
            ("report", "проверить результаты и записать отчёт"),
            ("run", "train + analyze + report"),
    ):
        subparsers.add_parser(name, parents=[common], help=help_text)
    return parser


def load_config(args: argparse.Namespace) -> PipelineConfig:
    """Конфигурация из файла с переопределениями из флагов."""
    config = ConfigStorage.load(args.config)
    overrides = {name: getattr(args, name) for name in PipelineConfig.field_names()}
    return config.with_overrides(overrides)


def cmd_list_systems() -> str:
    text = IO.format_systems()
    print(text, end="")
    return text


def cmd_train(pipeline: BoundaryPipeline) -> int:
    result = pipeline.train()
    IO.print_training_summary(result, str(pipeline.storage.checkpoint_path), pipeline.config.total_timesteps)
    return EXIT_OK


def cmd_analyze(pipeline: BoundaryPipeline) -> int:
    try:
        result = pipeline.analyze()
    except NoCounterfactualsError as e:
        logger.warning("%s", e)
        IO.print_no_counterfactuals(str(e))
        return EXIT_NO_COUNTERFACTUALS
    IO.print_analysis_summary(result)
    return EXIT_OK


def cmd_report(pipeline: BoundaryPipeline) -> int:
    report = pipeline.report()
    IO.print_report_summary(report, str(pipeline.storage.report_path))
    return EXIT_OK if report.passed else EXIT_VALIDATION_FAILED


def cmd_run(pipeline: BoundaryPipeline) -> int:
    cmd_train(pipeline)
    code = cmd_analyze(pipeline)
    report_code = cmd_report(pipeline)
    return code if code != EXIT_OK else report_code


COMMANDS = {
    "train": cmd_train,
    "analyze": cmd_analyze,
    "report": cmd_report,
    "run": cmd_run,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Точка входа командной строки; возвращает код завершения."""
    args = build_parser().parse_args(argv)
    if args.command == "list-systems":
        cmd_list_systems()
        return EXIT_OK

    _configure_logging(args.verbose)
    try:
        pipeline = BoundaryPipeline(load_config(args), progress=not args.no_progress)
        return COMMANDS[args.command](pipeline)
    except BoundaryExplorerError as e:
        logger.exception("Pipeline failed")
        print(f"Ошибка: {e}", file=sys.stderr)
        return EXIT_PIPELINE_ERROR


if __name__ == "__main__":
    try:
        sys.exit(main())
    except Exception as e:
        logger.critical("Unhandled exception in main: %s", e, exc_info=True)
        sys.exit(EXIT_PIPELINE_ERROR)
