"""
Preprocess Module for TermNMT
Identifies technical term pairs, replaces them by TT_i tokens and builds vocabularies
"""

from os import path as os_path
from typing import List, Optional, Sequence, Tuple

from TermNMT.corpus.corpus import ParallelPair, filter_by_length
from TermNMT.corpus.vocabulary import build_vocabulary, placeholder
from TermNMT.errors import ConfigError
from TermNMT.logger.logging_config import get_logger
from TermNMT.ops.file_io import read_corpus, read_phrase_table, write_json, write_text
from TermNMT.terms.term_align import PhraseTable, TermPairStatistics, identify_term_pairs
from TermNMT.terms.term_extract import ExtractConfig, extract_candidate_terms
from TermNMT.terms.token_sub import TokenizedPair, tokenize_training_pair

TRAIN_TOKENS_FILE = "train.tok.txt"
DEV_TOKENS_FILE = "dev.tok.txt"
SOURCE_VOCAB_FILE = "source_vocab.json"
TARGET_VOCAB_FILE = "target_vocab.json"
TERM_PAIRS_FILE = "term_pairs.txt"
TERM_STATS_FILE = "term_stats.json"


def format_token_pairs(pairs: Sequence[TokenizedPair]) -> str:
    return "".join(" ".join(p.source_tokens) + "\t" + " ".join(p.target_tokens) + "\n" for p in pairs)


def parse_token_pairs(path: str) -> List[Tuple[List[str], List[str]]]:
    """Read `source tokens<TAB>target tokens` lines written by preprocess"""
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f.read().splitlines():
            if not line:
                continue
            source, _, target = line.partition("\t")
            pairs.append((source.split(), target.split()))
    return pairs


class CorpusPreprocessor:
    """Class handling training-corpus preprocessing"""

    def __init__(self, progress_callback=None, atomic_write_file=None):
        """
        Initialize corpus preprocessor

        Args:
            progress_callback: Function to call for progress updates (0-100)
            atomic_write_file: Function for atomic file writing
        """
        self.progress_callback = progress_callback
        self._atomic_write_file = atomic_write_file
        self._cancel_requested = False
        self.logger = get_logger("TermNMT.Preprocess")

    def update_progress(self, value):
        """Update progress if callback is available"""
        if self.progress_callback:
            self.progress_callback(value)

    def request_cancel(self):
        """Request cancellation of a running operation."""
        self._cancel_requested = True

    def tokenize_pairs(
        self,
        pairs: Sequence[ParallelPair],
        table: Optional[PhraseTable],
        extract_config: ExtractConfig,
        max_placeholders: int,
        use_word_alignment: bool = True,
        statistics: Optional[TermPairStatistics] = None,
    ) -> List[TokenizedPair]:
        """
        Replace identified term pairs on both sides; without a table the
        surfaces pass through unchanged
        """
        result = []
        for pair in pairs:
            if table is None:
                result.append(TokenizedPair(pair.source.surfaces, pair.target.surfaces))
                continue
            terms = extract_candidate_terms(pair.source, extract_config)
            term_pairs = identify_term_pairs(pair, terms, table, use_word_alignment, statistics)
            result.append(tokenize_training_pair(pair, term_pairs, max_placeholders))
        return result

    def preprocess(
        self, corpus_path: str, dev_path: Optional[str], table_path: Optional[str], out_dir: str, config
    ) -> Tuple[bool, str]:
        """
        Tokenize the training (and development) corpus

        Args:
            corpus_path: Training corpus
            dev_path: Optional development corpus
            table_path: Phrase table (required unless use_terms is off)
            out_dir: Output directory
            config: ConfigManager

        Returns:
            Tuple of (success, message)
        """
        try:
            use_terms = bool(config.get("use_terms"))
            align = config.get("align")
            num_placeholders = int(config.get("num_placeholders"))
            table = None
            if use_terms:
                if not table_path:
                    raise ConfigError("Term substitution needs paths.phrase_table")
                table = read_phrase_table(table_path, int(align["prob_column"]))

            train, dropped = filter_by_length(read_corpus(corpus_path), int(config.get("max_sentence_len")))
            dev = read_corpus(dev_path) if dev_path else []
            self.update_progress(20)

            statistics = TermPairStatistics()
            extract_config = config.extract_config()
            train_tokens = self.tokenize_pairs(
                train, table, extract_config, num_placeholders, bool(align["use_word_alignment"]), statistics
            )
            if self._cancel_requested:
                return False, "Operation cancelled by user"
            self.update_progress(60)
            dev_tokens = self.tokenize_pairs(
                dev, table, extract_config, num_placeholders, bool(align["use_word_alignment"])
            )

            source_vocab = build_vocabulary(
                [p.source_tokens for p in train_tokens], int(config.get("source_vocab_cap")), num_placeholders
            )
            target_vocab = build_vocabulary(
                [p.target_tokens for p in train_tokens], int(config.get("target_vocab_cap")), num_placeholders
            )
            self.update_progress(80)

            term_lines = []
            for index, tokenized in enumerate(train_tokens):
                for i, term_pair in sorted(tokenized.term_map.items()):
                    prob = "" if term_pair.prob is None else repr(term_pair.prob)
                    term_lines.append(
                        f"{index}\t{placeholder(i)}\t{term_pair.source_span.phrase}\t"
                        f"{term_pair.target_span.phrase}\t{term_pair.method.value}\t{prob}\n"
                    )
            report = statistics.to_dict() | {
                "use_terms": use_terms,
                "training_pairs": len(train_tokens),
                "dropped_long_pairs": dropped,
                "dev_pairs": len(dev_tokens),
                "placeholder_warnings": sum(len(p.warnings) for p in train_tokens),
                "source_vocab_size": len(source_vocab),
                "target_vocab_size": len(target_vocab),
            }

            write = self._atomic_write_file
            write_text(write, os_path.join(out_dir, TRAIN_TOKENS_FILE), format_token_pairs(train_tokens))
            write_text(write, os_path.join(out_dir, DEV_TOKENS_FILE), format_token_pairs(dev_tokens))
            write_json(write, os_path.join(out_dir, SOURCE_VOCAB_FILE), source_vocab.to_dict())
            write_json(write, os_path.join(out_dir, TARGET_VOCAB_FILE), target_vocab.to_dict())
            write_text(write, os_path.join(out_dir, TERM_PAIRS_FILE), "".join(term_lines))
            write_json(write, os_path.join(out_dir, TERM_STATS_FILE), report)
            self.update_progress(100)

            return True, (
                f"Preprocessed {len(train_tokens)} training pairs: "
                f"{statistics.by_phrase_table} term pairs by phrase table, "
                f"{statistics.by_word_alignment} by word alignment, {statistics.unmatched} unmatched"
            )
        except Exception as e:
            self.logger.error(f"Preprocessing failed: {e}", exc_info=True)
            return False, f"Preprocessing failed: {e}"
