"""
TermNMT - Terminology-aware neural machine translation pipeline

Subcommands:
- synth: synthetic corpora, phrase table and n-best fixture
- extract-terms: technical term candidates per source sentence
- preprocess: term pair identification and TT_i substitution
- train: attention encoder-decoder training
- translate: NMT decoding with technical term tokens
- rerank: NMT rescoring of SMT n-best lists
- evaluate: corpus BLEU and RIBES
"""

import argparse
import os
import signal
import sys

# Add parent directory to sys.path so TermNMT package imports work
# when running this script directly
parent_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if parent_dir not in sys.path:
    sys.path.insert(0, parent_dir)

from TermNMT import __version__  # noqa: E402
from TermNMT.ctrl.config_manager import ConfigManager  # noqa: E402
from TermNMT.ctrl.pipeline_controller import PipelineController  # noqa: E402
from TermNMT.errors import TermNMTError  # noqa: E402
from TermNMT.logger.logging_config import get_logger, setup_logging  # noqa: E402

# Subcommand -> (flag, paths key) for the file arguments it accepts
PATH_FLAGS = {
    "synth": [],
    "extract-terms": [("--corpus", "corpus"), ("--source", "source")],
    "preprocess": [("--corpus", "corpus"), ("--dev-corpus", "dev_corpus"), ("--phrase-table", "phrase_table")],
    "train": [("--data-dir", "data_dir")],
    "translate": [("--checkpoint", "checkpoint"), ("--phrase-table", "phrase_table"), ("--source", "source")],
    "rerank": [
        ("--checkpoint", "checkpoint"),
        ("--phrase-table", "phrase_table"),
        ("--source", "source"),
        ("--nbest", "nbest"),
    ],
    "evaluate": [("--hypothesis", "hypothesis"), ("--reference", "reference")],
}
NO_TERMS_COMMANDS = ("preprocess", "translate", "rerank")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="termnmt", description="Terminology-aware NMT pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON pipeline configuration")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override one setting (repeatable; VALUE is JSON or a plain string)",
    )
    parser.add_argument("--seed", type=int, help="Random seed for every stochastic step")
    parser.add_argument("--out-dir", help="Output directory (paths.out_dir)")
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Console log level; the log file always records DEBUG",
    )

    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for command, flags in PATH_FLAGS.items():
        sub = subparsers.add_parser(command, help=_command_help(command))
        for flag, key in flags:
            sub.add_argument(flag, dest=key, help=f"Overrides paths.{key}")
        if command in NO_TERMS_COMMANDS:
            sub.add_argument(
                "--no-terms", action="store_true", help="Run without technical term substitution (baseline)"
            )
        if command == "extract-terms":
            sub.add_argument(
                "--monolingual",
                action="store_true",
                help="Read tagged source sentences (--source) instead of a parallel corpus",
            )
    return parser


def _command_help(command: str) -> str:
    for line in (__doc__ or "").splitlines():
        if line.startswith(f"- {command}:"):
            return line.split(":", 1)[1].strip()
    return command


def build_config(args: argparse.Namespace) -> ConfigManager:
    """Defaults, then the config file, then --set overrides, then dedicated flags"""
    config = ConfigManager.load(args.config) if args.config else ConfigManager()
    for assignment in args.overrides:
        config.set_override(assignment)
    if args.seed is not None:
        config.set_value("seed", args.seed)
    if args.out_dir:
        config.set_value("paths.out_dir", os.path.abspath(args.out_dir))
    for _, key in PATH_FLAGS[args.command]:
        value = getattr(args, key, None)
        if value:
            config.set_value(f"paths.{key}", os.path.abspath(value))
    if getattr(args, "no_terms", False):
        config.set_value("use_terms", False)
    return config


def main(argv=None) -> int:
    """Main application entry point"""
    args = build_parser().parse_args(argv)
    try:
        config = build_config(args)
    except TermNMTError as e:
        print(f"error: {args.command}: {e}", file=sys.stderr)
        return 1

    setup_logging(config.get("log_dir"), console_level=args.log_level)
    logger = get_logger("TermNMT.App")
    controller = PipelineController(config)

    previous_handler = signal.getsignal(signal.SIGINT)

    def _cancel(signum, frame):
        logger.warning("Interrupt received; cancelling after the current step")
        controller.cancel_operation()

    signal.signal(signal.SIGINT, _cancel)
    try:
        success, message = controller.run_command(args.command, monolingual=getattr(args, "monolingual", False))
    finally:
        signal.signal(signal.SIGINT, previous_handler)

    if not success:
        print(f"error: {args.command}: {message}", file=sys.stderr)
        return 1
    print(message)
    return 0


if __name__ == "__main__":
    sys.exit(main())
