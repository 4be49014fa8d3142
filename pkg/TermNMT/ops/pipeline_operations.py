"""
Pipeline Operations Backend for TermNMT
Owns the shared file-writing helpers and the per-command operation classes
"""

import os
from os import path as os_path
from tempfile import mkstemp as tmp_mkstemp
from typing import List, Optional, Tuple

from TermNMT.logger.logging_config import get_logger
from TermNMT.ops.evaluate_op import TranslationEvaluator
from TermNMT.ops.preprocess_op import CorpusPreprocessor
from TermNMT.ops.rerank_op import NBestReranker
from TermNMT.ops.synth_op import CorpusSynthesizer
from TermNMT.ops.term_extract_op import TermExtractor
from TermNMT.ops.train_op import ModelTrainer
from TermNMT.ops.translate_op import TermTranslator


class PipelineOperations:
    """Class containing all pipeline commands"""

    def __init__(self, progress_callback=None):
        """
        Initialize pipeline operations handler

        Args:
            progress_callback: Function to call for progress updates (0-100)
        """
        self.progress_callback = progress_callback
        self._cancel_requested = False
        self.logger = get_logger("TermNMT.PipelineOps")
        # Files written by the current command, for the run manifest
        self.written_files: List[str] = []

        shared = {"progress_callback": self.update_progress, "atomic_write_file": self._atomic_write_file}
        self.synthesizer = CorpusSynthesizer(**shared)
        self.extractor = TermExtractor(**shared)
        self.preprocessor = CorpusPreprocessor(**shared)
        self.trainer = ModelTrainer(**shared)
        self.translator = TermTranslator(**shared)
        self.reranker = NBestReranker(**shared)
        self.evaluator = TranslationEvaluator(**shared)

    def _operations(self):
        return (
            self.synthesizer,
            self.extractor,
            self.preprocessor,
            self.trainer,
            self.translator,
            self.reranker,
            self.evaluator,
        )

    def update_progress(self, value):
        """Update progress if callback is available"""
        if self.progress_callback:
            self.progress_callback(value)

    def request_cancel(self):
        """Request cancellation of a running command."""
        self._cancel_requested = True
        for operation in self._operations():
            operation.request_cancel()

    def reset(self):
        """Clear the written-file record and cancellation flags before a new command"""
        self.written_files = []
        self._cancel_requested = False
        for operation in self._operations():
            operation._cancel_requested = False

    def _ensure_parent_dir(self, file_path: str):
        """
        Ensure the parent directory for `file_path` exists. If `file_path`
        does not contain a directory component, do nothing.
        """
        try:
            parent = os_path.dirname(file_path) if file_path else ""
            if parent:
                os.makedirs(parent, exist_ok=True)
        except Exception:
            # the subsequent write reports the failure
            self.logger.error(f"Failed to create parent directory for {file_path}", exc_info=True)

    def _atomic_write_file(self, final_path: str, write_func):
        """
        Atomically write to `final_path` using a temp file in the same directory.
        `write_func` is called with an open file object (binary mode).
        """
        parent = os_path.dirname(final_path) or os.getcwd()
        self._ensure_parent_dir(final_path)

        fd = None
        tmp_path = None
        try:
            fd, tmp_path = tmp_mkstemp(
                prefix=".termnmt_tmp_", suffix=os_path.splitext(final_path)[1] or ".tmp", dir=parent
            )
            with os.fdopen(fd, "wb") as tmpf:
                fd = None  # fdopen takes ownership
                write_func(tmpf)
                tmpf.flush()
                try:
                    os.fsync(tmpf.fileno())
                except (OSError, AttributeError):
                    pass

            os.replace(tmp_path, final_path)
            tmp_path = None
            self.written_files.append(os_path.abspath(final_path))

        except Exception:
            self.logger.error(f"Error during atomic write to {final_path}", exc_info=True)
            raise
        finally:
            if fd is not None:
                try:
                    os.close(fd)
                except Exception:
                    self.logger.error("Error closing file descriptor", exc_info=True)
            if tmp_path and os_path.exists(tmp_path):
                try:
                    os.remove(tmp_path)
                except Exception:
                    self.logger.error("Error removing temporary file", exc_info=True)

    def write_text(self, final_path: str, text: str):
        self._atomic_write_file(final_path, lambda f: f.write(text.encode("utf-8")))

    def synth(self, out_dir: str, config) -> Tuple[bool, str]:
        return self.synthesizer.synthesize(out_dir, config)

    def extract_terms(self, input_path: str, output_path: str, config, monolingual: bool) -> Tuple[bool, str]:
        return self.extractor.extract_terms(input_path, output_path, config, monolingual)

    def preprocess(
        self, corpus_path: str, dev_path: Optional[str], table_path: Optional[str], out_dir: str, config
    ) -> Tuple[bool, str]:
        return self.preprocessor.preprocess(corpus_path, dev_path, table_path, out_dir, config)

    def train(self, data_dir: str, out_dir: str, config) -> Tuple[bool, str]:
        return self.trainer.train(data_dir, out_dir, config)

    def translate(
        self, checkpoint_path: str, table_path: Optional[str], source_path: str, out_dir: str, config
    ) -> Tuple[bool, str]:
        return self.translator.translate_file(checkpoint_path, table_path, source_path, out_dir, config)

    def rerank(
        self,
        checkpoint_path: str,
        table_path: Optional[str],
        source_path: str,
        nbest_path: str,
        out_dir: str,
        config,
    ) -> Tuple[bool, str]:
        return self.reranker.rerank_file(checkpoint_path, table_path, source_path, nbest_path, out_dir, config)

    def evaluate(self, hypothesis_path: str, reference_path: str, output_path: str, config) -> Tuple[bool, str]:
        return self.evaluator.evaluate_files(hypothesis_path, reference_path, output_path, config)
