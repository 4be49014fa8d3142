"""
Rerank Module for TermNMT
NMT rescoring of SMT n-best lists with technical term tokens
"""

from os import path as os_path
from typing import Optional, Tuple

from TermNMT.corpus.corpus import load_tagged_sentences
from TermNMT.errors import ConfigError, NBestFormatError
from TermNMT.logger.logging_config import get_logger
from TermNMT.nmt.checkpoint import load_checkpoint
from TermNMT.ops.file_io import read_phrase_table, write_text
from TermNMT.rerank.rerank import rerank_sentence
from TermNMT.smt.smt_bridge import group_nbest, load_nbest

RANKED_FILE = "rerank.tsv"
BEST_FILE = "rerank.best.txt"
RANKED_HEADER = "sentence_idx\trank\tsmt_score\tnmt_score\tcombined\tcandidate\n"


class NBestReranker:
    """Class handling the rerank command"""

    def __init__(self, progress_callback=None, atomic_write_file=None):
        self.progress_callback = progress_callback
        self._atomic_write_file = atomic_write_file
        self._cancel_requested = False
        self.logger = get_logger("TermNMT.Rerank")

    def update_progress(self, value):
        """Update progress if callback is available"""
        if self.progress_callback:
            self.progress_callback(value)

    def request_cancel(self):
        """Request cancellation of a running operation."""
        self._cancel_requested = True

    def rerank_file(
        self,
        checkpoint_path: str,
        table_path: Optional[str],
        source_path: str,
        nbest_path: str,
        out_dir: str,
        config,
    ) -> Tuple[bool, str]:
        """
        Rerank the n-best list of every source sentence

        The n-best file must hold one group per source line, with sentence
        indices 0..n-1 in order.

        Args:
            checkpoint_path: Trained model
            table_path: Phrase table (required unless use_terms is off)
            source_path: Tagged source sentences
            nbest_path: Moses-format n-best list
            out_dir: Output directory
            config: ConfigManager (rerank section, use_terms)

        Returns:
            Tuple of (success, message)
        """
        try:
            use_terms = bool(config.get("use_terms"))
            table = None
            if use_terms:
                if not table_path:
                    raise ConfigError("Reranking with term tokens needs paths.phrase_table")
                table = read_phrase_table(table_path, int(config.get("align", "prob_column")))
            model, source_vocab, target_vocab = load_checkpoint(checkpoint_path)
            with open(source_path, "r", encoding="utf-8") as f:
                sources = load_tagged_sentences(f)
            with open(nbest_path, "r", encoding="utf-8") as f:
                groups = group_nbest(load_nbest(f))

            if len(groups) != len(sources):
                raise NBestFormatError(
                    f"N-best list covers {len(groups)} sentences but the source has {len(sources)}"
                )
            if [index for index, _ in groups] != list(range(len(sources))):
                raise NBestFormatError("N-best sentence indices must run 0..n-1 without gaps")

            extract_config = config.extract_config()
            normalize = bool(config.get("rerank", "use_length_normalization"))
            ranked_lines = [RANKED_HEADER]
            best_lines = []
            promoted = 0
            for (index, candidates), source in zip(groups, sources):
                if self._cancel_requested:
                    return False, "Operation cancelled by user"
                result = rerank_sentence(
                    model,
                    source_vocab,
                    target_vocab,
                    source,
                    candidates,
                    table,
                    extract_config,
                    use_terms,
                    normalize,
                )
                ranked_lines.extend(line + "\n" for line in result.records())
                best_lines.append(result.final_sentence + "\n")
                if result.ranked[0].smt_rank != 1:
                    promoted += 1
                self.update_progress(100.0 * (index + 1) / len(groups))

            write_text(self._atomic_write_file, os_path.join(out_dir, RANKED_FILE), "".join(ranked_lines))
            write_text(self._atomic_write_file, os_path.join(out_dir, BEST_FILE), "".join(best_lines))
            return True, f"Reranked {len(groups)} n-best lists; {promoted} changed their top candidate"
        except Exception as e:
            self.logger.error(f"Reranking failed: {e}", exc_info=True)
            return False, f"Reranking failed: {e}"
