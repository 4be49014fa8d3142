"""
TermNMT Controller - Core Logic

This module holds the command state, dispatches pipeline commands to the
operations backend and writes a run manifest for every successful command.
"""

import hashlib
import json
import platform
from os import path as os_path
from typing import Dict, List, Optional, Tuple

import numpy as np
import sacrebleu
import scipy

from TermNMT import __version__
from TermNMT.ctrl.config_manager import ConfigManager
from TermNMT.logger.logging_config import get_logger
from TermNMT.ops.pipeline_operations import PipelineOperations

COMMANDS = ("synth", "extract-terms", "preprocess", "train", "translate", "rerank", "evaluate")
TERMS_FILE = "terms.txt"
EVAL_FILE = "eval.json"


def file_digest(file_path: str) -> str:
    digest = hashlib.sha256()
    with open(file_path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def runtime_versions() -> Dict[str, str]:
    return {
        "TermNMT": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "sacrebleu": sacrebleu.__version__,
        "python": platform.python_version(),
    }


class PipelineController:
    """Controller class that manages command state and dispatch"""

    def __init__(self, config: Optional[ConfigManager] = None, progress_callback=None):
        # Command state
        self.config = config or ConfigManager()
        self.selected_command: Optional[str] = None
        self.operation_running = False
        self.current_output: Optional[str] = None
        self.last_manifest: Optional[dict] = None

        self.logger = get_logger("TermNMT.Controller")
        self.pipeline_ops = PipelineOperations(progress_callback=progress_callback)
        self.progress_callback = progress_callback
        self.completion_callback = None

    def set_completion_callback(self, completion_callback=None):
        """Set the function called with (success, message, output) after each command"""
        self.completion_callback = completion_callback

    def select_command(self, command: str) -> bool:
        if command in COMMANDS:
            self.selected_command = command
            return True
        return False

    def run_command(self, command: str, monolingual: bool = False) -> Tuple[bool, str]:
        """
        Run one pipeline command with the current configuration

        Args:
            command: One of COMMANDS
            monolingual: extract-terms reads tagged source sentences instead of a parallel corpus

        Returns:
            Tuple of (success, message)
        """
        if not self.select_command(command):
            return False, f"Unknown command {command!r}"
        if self.operation_running:
            return False, "A command is already running!"

        self.operation_running = True
        self.pipeline_ops.reset()
        success, message = False, ""
        try:
            out_dir = self.config.require_path("out_dir")
            success, message = self._dispatch(command, out_dir, monolingual)
            if success:
                self.last_manifest = self.write_manifest(command, out_dir)
                self.current_output = out_dir
            else:
                self.current_output = None
        except Exception as e:
            self.logger.error(f"Command {command} failed: {e}", exc_info=True)
            success, message = False, str(e)
        finally:
            self.operation_running = False

        if self.completion_callback:
            self.completion_callback(success, message, self.current_output)
        return success, message

    def _dispatch(self, command: str, out_dir: str, monolingual: bool) -> Tuple[bool, str]:
        config = self.config
        ops = self.pipeline_ops
        if command == "synth":
            return ops.synth(out_dir, config)
        if command == "extract-terms":
            input_path = config.require_path("source" if monolingual else "corpus")
            return ops.extract_terms(input_path, os_path.join(out_dir, TERMS_FILE), config, monolingual)
        if command == "preprocess":
            return ops.preprocess(
                config.require_path("corpus"),
                config.path("dev_corpus"),
                config.path("phrase_table"),
                out_dir,
                config,
            )
        if command == "train":
            return ops.train(config.require_path("data_dir"), out_dir, config)
        if command == "translate":
            return ops.translate(
                config.require_path("checkpoint"),
                config.path("phrase_table"),
                config.require_path("source"),
                out_dir,
                config,
            )
        if command == "rerank":
            return ops.rerank(
                config.require_path("checkpoint"),
                config.path("phrase_table"),
                config.require_path("source"),
                config.require_path("nbest"),
                out_dir,
                config,
            )
        return ops.evaluate(
            config.require_path("hypothesis"),
            config.require_path("reference"),
            os_path.join(out_dir, EVAL_FILE),
            config,
        )

    def manifest_outputs(self, out_dir: str) -> List[dict]:
        """Files written by the last command, relative to out_dir, with sha256 digests"""
        outputs = {}
        for file_path in self.pipeline_ops.written_files:
            relative = os_path.relpath(file_path, os_path.abspath(out_dir)).replace(os_path.sep, "/")
            outputs[relative] = file_digest(file_path)
        return [{"path": name, "sha256": outputs[name]} for name in sorted(outputs)]

    def write_manifest(self, command: str, out_dir: str) -> dict:
        """
        Write `<out_dir>/manifest.<command>.json`

        The manifest holds no timestamps, so identical runs give identical files.
        """
        manifest = {
            "command": command,
            "config_hash": self.config.config_hash(),
            "seed": self.config.seed,
            "versions": runtime_versions(),
            "outputs": self.manifest_outputs(out_dir),
        }
        text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        self.pipeline_ops.write_text(os_path.join(out_dir, f"manifest.{command}.json"), text)
        self.logger.info(f"Wrote manifest for {command} with {len(manifest['outputs'])} outputs")
        return manifest

    def cancel_operation(self):
        """Cancel the current command (cooperative; checked between sentences and minibatches)"""
        try:
            self.pipeline_ops.request_cancel()
        except Exception:
            self.logger.debug("Error requesting operation cancellation", exc_info=True)
