"""
Translate Module for TermNMT
NMT decoding with technical term tokens: tokenize source, beam decode,
translate the terms with the phrase table and restore them
"""

from dataclasses import asdict, dataclass, field
from os import path as os_path
from typing import Dict, List, Optional, Tuple

from TermNMT.corpus.corpus import TaggedSentence, load_tagged_sentences, warn_if_long
from TermNMT.corpus.vocabulary import UNK, UNK_ID, Vocabulary, placeholder
from TermNMT.errors import ConfigError
from TermNMT.evaluation.metrics import count_unknown_tokens
from TermNMT.logger.logging_config import get_logger
from TermNMT.nmt.beam import beam_decode
from TermNMT.nmt.checkpoint import load_checkpoint
from TermNMT.nmt.model import NmtModel
from TermNMT.ops.file_io import read_phrase_table, write_json, write_text
from TermNMT.smt.smt_bridge import translate_term_with_method
from TermNMT.terms.term_align import PhraseTable
from TermNMT.terms.term_extract import ExtractConfig, extract_candidate_terms
from TermNMT.terms.token_sub import restore_tokens, tokenize_source

TRANSLATIONS_FILE = "translations.txt"
DIAGNOSTICS_FILE = "translations.diagnostics.json"


@dataclass
class TermTranslation:
    token: str
    surface: str
    constituents: List[str]
    translation: str
    method: str


@dataclass
class SentenceTranslation:
    """Decoding record of one sentence"""

    index: int
    source_tokens: List[str]
    output_tokens: List[str]
    final_sentence: str
    logprob: float
    terms: List[TermTranslation] = field(default_factory=list)
    unknown_input: int = 0
    unknown_output: int = 0
    warnings: List[str] = field(default_factory=list)

    @property
    def unknown_tokens(self) -> int:
        return self.unknown_input + self.unknown_output

    def to_dict(self) -> dict:
        return asdict(self) | {"unknown_tokens": self.unknown_tokens}


def translate_sentence(
    model: NmtModel,
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
    sentence: TaggedSentence,
    table: Optional[PhraseTable],
    extract_config: ExtractConfig = ExtractConfig(),
    use_terms: bool = True,
    beam_size: int = 8,
    max_len: int = 60,
    index: int = 0,
) -> SentenceTranslation:
    """
    Translate one tagged source sentence

    With use_terms off the surfaces go to the model unchanged and no term is
    translated separately.
    """
    if use_terms and table is None:
        raise ValueError("A phrase table is required to translate terms")
    token_warnings: List[str] = []
    terms: List[TermTranslation] = []
    translations: Dict[int, str] = {}
    if use_terms:
        extracted = extract_candidate_terms(sentence, extract_config)
        source_tokens, term_list, token_warnings = tokenize_source(sentence, extracted, source_vocab.num_placeholders)
        for i, term in enumerate(term_list, start=1):
            translation, method = translate_term_with_method(term.surface, term.constituents, table)
            translations[i] = translation
            terms.append(TermTranslation(placeholder(i), term.surface, list(term.constituents), translation, method))
    else:
        source_tokens = sentence.surfaces

    source_ids = source_vocab.encode(source_tokens)
    output_ids, logprob = beam_decode(model, source_ids, beam_size, max_len)
    output_tokens = target_vocab.decode(output_ids)
    final_sentence, warnings = restore_tokens(output_tokens, translations)
    return SentenceTranslation(
        index=index,
        source_tokens=list(source_tokens),
        output_tokens=output_tokens,
        final_sentence=final_sentence,
        logprob=logprob,
        terms=terms,
        unknown_input=sum(1 for i in source_ids if i == UNK_ID),
        unknown_output=count_unknown_tokens([final_sentence.split()], UNK),
        warnings=token_warnings + warnings,
    )


class TermTranslator:
    """Class handling the translate command"""

    def __init__(self, progress_callback=None, atomic_write_file=None):
        """
        Initialize term translator

        Args:
            progress_callback: Function to call for progress updates (0-100)
            atomic_write_file: Function for atomic file writing
        """
        self.progress_callback = progress_callback
        self._atomic_write_file = atomic_write_file
        self._cancel_requested = False
        self.logger = get_logger("TermNMT.Translate")

    def update_progress(self, value):
        """Update progress if callback is available"""
        if self.progress_callback:
            self.progress_callback(value)

    def request_cancel(self):
        """Request cancellation of a running operation."""
        self._cancel_requested = True

    def translate_file(
        self, checkpoint_path: str, table_path: Optional[str], source_path: str, out_dir: str, config
    ) -> Tuple[bool, str]:
        """
        Translate one tagged source sentence per line

        Writes the final sentences and a diagnostics sidecar with the tokens
        used, term translations and unknown-token counts.

        Args:
            checkpoint_path: Trained model
            table_path: Phrase table (required unless use_terms is off)
            source_path: Tagged source sentences
            out_dir: Output directory
            config: ConfigManager (decode section, use_terms)

        Returns:
            Tuple of (success, message)
        """
        try:
            use_terms = bool(config.get("use_terms"))
            table = None
            if use_terms:
                if not table_path:
                    raise ConfigError("Term translation needs paths.phrase_table")
                table = read_phrase_table(table_path, int(config.get("align", "prob_column")))
            model, source_vocab, target_vocab = load_checkpoint(checkpoint_path)
            with open(source_path, "r", encoding="utf-8") as f:
                sentences = load_tagged_sentences(f)

            extract_config = config.extract_config()
            decode = config.get("decode")
            max_sentence_len = int(config.get("max_sentence_len"))
            results: List[SentenceTranslation] = []
            for index, sentence in enumerate(sentences):
                if self._cancel_requested:
                    return False, "Operation cancelled by user"
                warn_if_long(sentence, max_sentence_len)
                results.append(
                    translate_sentence(
                        model,
                        source_vocab,
                        target_vocab,
                        sentence,
                        table,
                        extract_config,
                        use_terms,
                        int(decode["beam_size"]),
                        int(decode["max_len"]),
                        index,
                    )
                )
                self.update_progress(100.0 * (index + 1) / len(sentences))

            totals = {
                "sentences": len(results),
                "terms": sum(len(r.terms) for r in results),
                "unknown_input": sum(r.unknown_input for r in results),
                "unknown_output": sum(r.unknown_output for r in results),
                "unknown_tokens": sum(r.unknown_tokens for r in results),
                "warnings": sum(len(r.warnings) for r in results),
            }
            write_text(
                self._atomic_write_file,
                os_path.join(out_dir, TRANSLATIONS_FILE),
                "".join(r.final_sentence + "\n" for r in results),
            )
            write_json(
                self._atomic_write_file,
                os_path.join(out_dir, DIAGNOSTICS_FILE),
                {"use_terms": use_terms, "totals": totals, "sentences": [r.to_dict() for r in results]},
            )
            return True, (
                f"Translated {len(results)} sentences with {totals['terms']} terms; "
                f"{totals['unknown_tokens']} unknown tokens"
            )
        except Exception as e:
            self.logger.error(f"Translation failed: {e}", exc_info=True)
            return False, f"Translation failed: {e}"
