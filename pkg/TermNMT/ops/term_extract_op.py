"""
Term Extraction Module for TermNMT
Lists technical term candidates of each source sentence
"""

from typing import Tuple

from TermNMT.corpus.corpus import load_tagged_sentences
from TermNMT.logger.logging_config import get_logger
from TermNMT.ops.file_io import read_corpus, write_text
from TermNMT.terms.term_extract import extract_candidate_terms


class TermExtractor:
    """Class handling the extract-terms command"""

    def __init__(self, progress_callback=None, atomic_write_file=None):
        self.progress_callback = progress_callback
        self._atomic_write_file = atomic_write_file
        self._cancel_requested = False
        self.logger = get_logger("TermNMT.Extract")

    def update_progress(self, value):
        """Update progress if callback is available"""
        if self.progress_callback:
            self.progress_callback(value)

    def request_cancel(self):
        """Request cancellation of a running operation."""
        self._cancel_requested = True

    def extract_terms(self, input_path: str, output_path: str, config, monolingual: bool) -> Tuple[bool, str]:
        """
        Write `sentence_idx<TAB>start<TAB>end<TAB>surface<TAB>constituents` per term

        Args:
            input_path: Parallel corpus, or tagged source sentences when monolingual
            output_path: Output file
            config: ConfigManager (extract section)
            monolingual: Input holds one tagged sentence per line

        Returns:
            Tuple of (success, message)
        """
        try:
            extract_config = config.extract_config()
            if monolingual:
                with open(input_path, "r", encoding="utf-8") as f:
                    sentences = load_tagged_sentences(f)
            else:
                sentences = [p.source for p in read_corpus(input_path)]

            lines = []
            total = 0
            for index, sentence in enumerate(sentences):
                if self._cancel_requested:
                    return False, "Operation cancelled by user"
                for term in extract_candidate_terms(sentence, extract_config):
                    lines.append(f"{index}\t{term.start}\t{term.end}\t{term.surface}\t{term.phrase}\n")
                    total += 1
                self.update_progress(100.0 * (index + 1) / max(1, len(sentences)))
            write_text(self._atomic_write_file, output_path, "".join(lines))
            return True, f"Extracted {total} term candidates from {len(sentences)} sentences"
        except Exception as e:
            self.logger.error(f"Term extraction failed: {e}", exc_info=True)
            return False, f"Term extraction failed: {e}"
