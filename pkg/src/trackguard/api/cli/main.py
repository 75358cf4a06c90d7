"""
trackguard 命令列入口

    trackguard <generate|train|calibrate|evaluate|predict> --config <path> [--seed N] [--verbose]
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from config.settings import dump_config_yaml, get_config_summary, load_config
from src.trackguard.api.cli import commands
from src.trackguard.utils.exceptions import (
    ArtifactIOError,
    ConfigurationError,
    TrackguardError,
)
from src.trackguard.utils.logging_setup import setup_logging, status

logger = logging.getLogger(__name__)

# 結束碼
EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_IO = 4
EXIT_VALIDATION = 5


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trackguard",
        description="Track-circuit anomaly classification with conformal prediction sets",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", required=True, help="YAML run configuration")
        sub.add_argument("--seed", type=int, default=None, help="override the global seed")
        sub.add_argument(
            "--verbose",
            action="store_true",
            help="print the resolved configuration (defaults filled in) to stderr",
        )

    add_common(subparsers.add_parser("generate", help="write the synthetic dataset"))
    train = subparsers.add_parser("train", help="train the classifier")
    add_common(train)
    train.add_argument(
        "--dump-windows",
        action="store_true",
        help="also write preprocessed windows per split under data_dir/windows/",
    )
    add_common(subparsers.add_parser("calibrate", help="compute the conformal threshold"))
    add_common(subparsers.add_parser("evaluate", help="write the evaluation report"))
    predict = subparsers.add_parser("predict", help="prediction sets for one record CSV")
    add_common(predict)
    predict.add_argument("csv", help="record CSV to classify")
    return parser


def exit_code_for(error: Exception) -> int:
    """例外對應的結束碼"""
    if isinstance(error, ConfigurationError):
        return EXIT_CONFIG
    if isinstance(error, ArtifactIOError):
        return EXIT_IO
    # DataFormatError、DomainError 與其他驗證失敗
    return EXIT_VALIDATION


def _dispatch(args: argparse.Namespace) -> int:
    config = load_config(args.config, seed=args.seed)
    setup_logging(config.monitoring.log_level.value, config.monitoring.log_format)

    if args.verbose:
        status("🔧 有效配置：")
        sys.stderr.write(dump_config_yaml(config))
        sys.stderr.write(json.dumps(get_config_summary(config), indent=2) + "\n")

    if args.command == "generate":
        commands.cmd_generate(config)
    elif args.command == "train":
        commands.cmd_train(config, dump_windows=args.dump_windows)
    elif args.command == "calibrate":
        commands.cmd_calibrate(config)
    elif args.command == "evaluate":
        bundle = commands.cmd_evaluate(config)
        status(f"   accuracy={bundle.summary['accuracy']:.4f}")
    elif args.command == "predict":
        commands.cmd_predict(config, args.csv)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """主函數，回傳結束碼"""
    args = build_parser().parse_args(argv)
    setup_logging()
    try:
        return _dispatch(args)
    except TrackguardError as e:
        code = exit_code_for(e)
        logger.error("%s", e)
        status(f"❌ {type(e).__name__}: {e}")
        return code
