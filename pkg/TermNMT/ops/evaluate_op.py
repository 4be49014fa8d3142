"""
Evaluate Module for TermNMT
Corpus BLEU and RIBES of a hypothesis file against a reference file
"""

from typing import Tuple

from TermNMT.evaluation.metrics import count_unknown_tokens, evaluate_corpus
from TermNMT.logger.logging_config import get_logger
from TermNMT.ops.file_io import read_token_lines, write_json


class TranslationEvaluator:
    """Class handling the evaluate command"""

    def __init__(self, progress_callback=None, atomic_write_file=None):
        self.progress_callback = progress_callback
        self._atomic_write_file = atomic_write_file
        self._cancel_requested = False
        self.logger = get_logger("TermNMT.Evaluate")

    def update_progress(self, value):
        """Update progress if callback is available"""
        if self.progress_callback:
            self.progress_callback(value)

    def request_cancel(self):
        """Request cancellation of a running operation."""
        self._cancel_requested = True

    def evaluate_files(self, hypothesis_path: str, reference_path: str, output_path: str, config) -> Tuple[bool, str]:
        """
        Score one tokenized hypothesis per line against one reference per line

        Args:
            hypothesis_path: System output
            reference_path: References, aligned by line
            output_path: JSON report
            config: ConfigManager (eval section)

        Returns:
            Tuple of (success, summary message)
        """
        try:
            settings = config.get("eval")
            hypotheses = read_token_lines(hypothesis_path)
            references = read_token_lines(reference_path)
            self.update_progress(30)
            report = evaluate_corpus(
                hypotheses,
                references,
                int(settings["max_n"]),
                settings["smooth"],
                float(settings["alpha"]),
                float(settings["beta"]),
            )
            data = report.to_dict() | {"unknown_tokens": count_unknown_tokens(hypotheses)}
            write_json(self._atomic_write_file, output_path, data)
            self.update_progress(100)
            return True, report.summary()
        except Exception as e:
            self.logger.error(f"Evaluation failed: {e}", exc_info=True)
            return False, f"Evaluation failed: {e}"
