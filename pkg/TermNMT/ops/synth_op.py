"""
Synthetic Fixture Module for TermNMT
Writes train/dev/test corpora, phrase table, term lexicon and n-best fixture
"""

from os import path as os_path
from typing import Tuple

from TermNMT.corpus.corpus import serialize_corpus
from TermNMT.corpus.synthetic import generate_synthetic_corpus, make_nbest_fixture
from TermNMT.logger.logging_config import get_logger
from TermNMT.ops.file_io import write_text
from TermNMT.smt.smt_bridge import write_nbest
from TermNMT.terms.term_align import write_phrase_table

TRAIN_FILE = "train.txt"
DEV_FILE = "dev.txt"
TEST_FILE = "test.txt"
TEST_SOURCE_FILE = "test.src.txt"
TEST_REFERENCE_FILE = "test.ref.txt"
PHRASE_TABLE_FILE = "phrase_table.txt"
LEXICON_FILE = "lexicon.txt"
NBEST_FILE = "test.nbest.txt"


class CorpusSynthesizer:
    """Class handling synthetic fixture generation"""

    def __init__(self, progress_callback=None, atomic_write_file=None):
        """
        Initialize corpus synthesizer

        Args:
            progress_callback: Function to call for progress updates (0-100)
            atomic_write_file: Function for atomic file writing
        """
        self.progress_callback = progress_callback
        self._atomic_write_file = atomic_write_file
        self._cancel_requested = False
        self.logger = get_logger("TermNMT.Synth")

    def update_progress(self, value):
        """Update progress if callback is available"""
        if self.progress_callback:
            self.progress_callback(value)

    def request_cancel(self):
        """Request cancellation of a running operation."""
        self._cancel_requested = True

    def synthesize(self, out_dir: str, config) -> Tuple[bool, str]:
        """
        Generate a synthetic experiment

        Train and dev data draw only non-held-out terms; test data may draw
        held-out terms as well.

        Args:
            out_dir: Output directory
            config: ConfigManager (synth section and seed)

        Returns:
            Tuple of (success, message)
        """
        try:
            settings = config.get("synth")
            grammar = config.grammar()
            seed = config.seed

            train, table, lexicon = generate_synthetic_corpus(seed, int(settings["train_pairs"]), grammar)
            self.update_progress(30)
            dev, _, _ = generate_synthetic_corpus(seed + 1, int(settings["dev_pairs"]), grammar)
            test, _, _ = generate_synthetic_corpus(
                seed + 2, int(settings["test_pairs"]), grammar, include_held_out=True
            )
            self.update_progress(60)
            if self._cancel_requested:
                return False, "Operation cancelled by user"

            outputs = {
                TRAIN_FILE: serialize_corpus(train),
                DEV_FILE: serialize_corpus(dev),
                TEST_FILE: serialize_corpus(test),
                TEST_SOURCE_FILE: "".join(p.source.to_text() + "\n" for p in test),
                TEST_REFERENCE_FILE: "".join(p.target.surface_text() + "\n" for p in test),
                PHRASE_TABLE_FILE: write_phrase_table(table),
                LEXICON_FILE: lexicon.to_text(),
                NBEST_FILE: write_nbest(make_nbest_fixture(test, lexicon, int(settings["nbest_size"]), seed + 3)),
            }
            for name, text in outputs.items():
                write_text(self._atomic_write_file, os_path.join(out_dir, name), text)
            self.update_progress(100)

            held_out = len(lexicon.held_out_terms())
            return True, (
                f"Synthesized {len(train)}/{len(dev)}/{len(test)} train/dev/test pairs, "
                f"{len(lexicon.terms)} terms ({held_out} held out) in {out_dir}"
            )
        except Exception as e:
            self.logger.error(f"Synthesis failed: {e}", exc_info=True)
            return False, f"Synthesis failed: {e}"
