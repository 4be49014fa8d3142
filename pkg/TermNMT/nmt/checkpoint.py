"""
Versioned .npz checkpoints: configuration, parameters and vocabularies

Layout (all arrays, loadable with allow_pickle=False):
    meta/format_version   int64 scalar
    meta/config           JSON text of NmtConfig
    meta/source_vocab     token array, meta/target_vocab likewise
    meta/num_placeholders int64 scalar
    param/<name>          float64 tensor, shape as in parameter_shapes
"""

import json
from typing import BinaryIO, Tuple, Union

import numpy as np

from TermNMT.corpus.vocabulary import Vocabulary
from TermNMT.errors import ModelError
from TermNMT.logger.logging_config import get_logger
from TermNMT.nmt.config import NmtConfig
from TermNMT.nmt.model import NmtModel

logger = get_logger("TermNMT.Checkpoint")

FORMAT_VERSION = 1
PARAM_PREFIX = "param/"


def save_checkpoint(
    model: NmtModel,
    target: Union[str, BinaryIO],
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
):
    """
    Write a checkpoint to a path or binary file object

    Raises:
        ModelError: Vocabulary sizes disagree with the model configuration
    """
    if len(source_vocab) != model.config.source_vocab_size or len(target_vocab) != model.config.target_vocab_size:
        raise ModelError(
            f"Vocabulary sizes ({len(source_vocab)}, {len(target_vocab)}) do not match the model "
            f"({model.config.source_vocab_size}, {model.config.target_vocab_size})"
        )
    arrays = {
        "meta/format_version": np.array(FORMAT_VERSION, dtype=np.int64),
        "meta/config": np.array(json.dumps(model.config.to_dict(), sort_keys=True)),
        "meta/source_vocab": np.array(source_vocab.id_to_token, dtype=str),
        "meta/target_vocab": np.array(target_vocab.id_to_token, dtype=str),
        "meta/num_placeholders": np.array(target_vocab.num_placeholders, dtype=np.int64),
    }
    for name, value in model.params.items():
        arrays[PARAM_PREFIX + name] = value
    np.savez(target, **arrays)


def load_checkpoint(source: Union[str, BinaryIO]) -> Tuple[NmtModel, Vocabulary, Vocabulary]:
    """
    Read a checkpoint written by save_checkpoint

    Returns:
        Tuple of (model, source vocabulary, target vocabulary)

    Raises:
        ModelError: Unknown format version or inconsistent content
    """
    try:
        with np.load(source, allow_pickle=False) as data:
            version = int(data["meta/format_version"])
            if version != FORMAT_VERSION:
                raise ModelError(f"Unsupported checkpoint format version {version}")
            config = NmtConfig.from_dict(json.loads(str(data["meta/config"])))
            num_placeholders = int(data["meta/num_placeholders"])
            source_vocab = Vocabulary([str(t) for t in data["meta/source_vocab"]], num_placeholders)
            target_vocab = Vocabulary([str(t) for t in data["meta/target_vocab"]], num_placeholders)
            params = {
                key[len(PARAM_PREFIX) :]: np.array(data[key]) for key in data.files if key.startswith(PARAM_PREFIX)
            }
    except KeyError as e:
        raise ModelError(f"Checkpoint is missing {e}")
    model = NmtModel(config, params)
    if not model.is_finite():
        raise ModelError("Checkpoint contains non-finite parameters")
    logger.info(f"Loaded checkpoint with {model.num_parameters()} parameters")
    return model, source_vocab, target_vocab
