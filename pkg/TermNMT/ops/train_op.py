"""
Train Module for TermNMT
Trains the attention encoder-decoder on preprocessed token files
"""

from os import path as os_path
from typing import List, Tuple

from TermNMT.corpus.vocabulary import Vocabulary
from TermNMT.logger.logging_config import get_logger
from TermNMT.nmt.backprop import IdPair
from TermNMT.nmt.checkpoint import save_checkpoint
from TermNMT.nmt.model import init_model
from TermNMT.nmt.trainer import NmtTrainer
from TermNMT.ops.file_io import write_json
from TermNMT.ops.preprocess_op import (
    DEV_TOKENS_FILE,
    SOURCE_VOCAB_FILE,
    TARGET_VOCAB_FILE,
    TRAIN_TOKENS_FILE,
    parse_token_pairs,
)

CHECKPOINT_FILE = "model.npz"
HISTORY_FILE = "history.json"


def to_id_pairs(token_pairs, source_vocab: Vocabulary, target_vocab: Vocabulary) -> List[IdPair]:
    """Map token pairs to ids; targets end with EOS. Pairs with an empty side are skipped."""
    return [
        (source_vocab.encode(source), target_vocab.encode(target, add_eos=True))
        for source, target in token_pairs
        if source and target
    ]


class ModelTrainer:
    """Class handling the train command"""

    def __init__(self, progress_callback=None, atomic_write_file=None):
        self.progress_callback = progress_callback
        self._atomic_write_file = atomic_write_file
        self._cancel_requested = False
        self._active = None
        self.logger = get_logger("TermNMT.Train")

    def update_progress(self, value):
        """Update progress if callback is available"""
        if self.progress_callback:
            self.progress_callback(value)

    def request_cancel(self):
        """Request cancellation of a running operation."""
        self._cancel_requested = True
        if self._active is not None:
            self._active.request_cancel()

    def train(self, data_dir: str, out_dir: str, config) -> Tuple[bool, str]:
        """
        Train a model from the output of the preprocess command

        Args:
            data_dir: Directory holding token files and vocabularies
            out_dir: Output directory for the checkpoint and training history
            config: ConfigManager (nmt section and seed)

        Returns:
            Tuple of (success, message)
        """
        try:
            source_vocab = Vocabulary.load(os_path.join(data_dir, SOURCE_VOCAB_FILE))
            target_vocab = Vocabulary.load(os_path.join(data_dir, TARGET_VOCAB_FILE))
            train_pairs = to_id_pairs(
                parse_token_pairs(os_path.join(data_dir, TRAIN_TOKENS_FILE)), source_vocab, target_vocab
            )
            dev_path = os_path.join(data_dir, DEV_TOKENS_FILE)
            dev_pairs = (
                to_id_pairs(parse_token_pairs(dev_path), source_vocab, target_vocab)
                if os_path.exists(dev_path)
                else []
            )

            # the top-level seed drives initialization and minibatch order
            nmt_config = config.nmt_config(len(source_vocab), len(target_vocab)).replace(seed=config.seed)
            model = init_model(nmt_config, nmt_config.seed)
            self.logger.info(f"Initialized model with {model.num_parameters()} parameters")

            if self._cancel_requested:
                return False, "Operation cancelled by user"
            self._active = NmtTrainer(nmt_config, self.progress_callback)
            try:
                model, history = self._active.train(model, train_pairs, dev_pairs)
            finally:
                self._active = None
            if history.cancelled:
                return False, "Operation cancelled by user"

            self._atomic_write_file(
                os_path.join(out_dir, CHECKPOINT_FILE),
                lambda f: save_checkpoint(model, f, source_vocab, target_vocab),
            )
            write_json(self._atomic_write_file, os_path.join(out_dir, HISTORY_FILE), history.to_dict())

            final_loss = history.epoch_losses[-1] if history.epoch_losses else float("nan")
            return True, (
                f"Trained {history.batches} batches on {len(train_pairs)} pairs; "
                f"final mean token loss {final_loss:.4f}, lr {history.final_lr:.6g}"
            )
        except Exception as e:
            self.logger.error(f"Training failed: {e}", exc_info=True)
            return False, f"Training failed: {e}"
