"""
Config Manager - Loads the JSON pipeline configuration, applies command-line
overrides and hands typed settings objects to the operations.
"""

import copy
import hashlib
import json
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, Optional

from TermNMT.corpus.synthetic import SyntheticGrammar
from TermNMT.errors import ConfigError
from TermNMT.nmt.config import NmtConfig
from TermNMT.terms.term_extract import ExtractConfig

PATH_KEYS = (
    "corpus",
    "dev_corpus",
    "phrase_table",
    "data_dir",
    "checkpoint",
    "source",
    "nbest",
    "hypothesis",
    "reference",
    "out_dir",
)

# Vocabulary sizes come from the preprocessed data, not from the file
_NMT_DERIVED = ("source_vocab_size", "target_vocab_size")

DEFAULT_CONFIG: Dict[str, Any] = {
    "paths": {key: None for key in PATH_KEYS} | {"out_dir": "out"},
    "extract": ExtractConfig().to_dict(),
    "align": {"prob_column": 0, "use_word_alignment": True},
    "nmt": {
        k: v
        for k, v in NmtConfig(
            layers=2, hidden_size=64, minibatch=32, epochs=10, eval_every_batches=100, max_decode_len=60
        )
        .to_dict()
        .items()
        if k not in _NMT_DERIVED
    },
    "decode": {"beam_size": 8, "max_len": 60},
    "rerank": {"use_length_normalization": False},
    "synth": {
        "train_pairs": 2000,
        "dev_pairs": 200,
        "test_pairs": 200,
        "nbest_size": 10,
        "grammar": asdict(SyntheticGrammar(held_out_fraction=0.3)),
    },
    "eval": {"max_n": 4, "smooth": "none", "alpha": 0.25, "beta": 0.10},
    "use_terms": True,
    "num_placeholders": 20,
    "max_sentence_len": 40,
    "source_vocab_cap": 40000,
    "target_vocab_cap": 40000,
    "seed": 1234,
    "log_dir": None,
}


def _merge(defaults: Dict[str, Any], data: Dict[str, Any], where: str) -> Dict[str, Any]:
    merged = copy.deepcopy(defaults)
    for key, value in data.items():
        if key not in defaults:
            raise ConfigError(f"Unknown setting {where}{key}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"Setting {where}{key} must be an object")
            merged[key] = _merge(defaults[key], value, f"{where}{key}.")
        else:
            merged[key] = value
    return merged


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


class ConfigManager:
    """Effective pipeline configuration: defaults, then the file, then overrides"""

    def __init__(self, data: Optional[Dict[str, Any]] = None, base_dir: Optional[str] = None):
        self.data = _merge(DEFAULT_CONFIG, data or {}, "")
        self.base_dir = Path(base_dir) if base_dir else Path.cwd()

    @classmethod
    def load(cls, path: str) -> "ConfigManager":
        """Read a JSON config file; relative paths resolve against its directory"""
        config_path = Path(path)
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"Config file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file {path} is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must contain a JSON object")
        return cls(data, base_dir=str(config_path.parent))

    def set_override(self, assignment: str):
        """Apply `section.key=value`; value is parsed as JSON with string fallback"""
        dotted, sep, raw = assignment.partition("=")
        if not sep or not dotted:
            raise ConfigError(f"Override {assignment!r} is not of the form section.key=value")
        self.set_value(dotted, _parse_value(raw))

    def set_value(self, dotted: str, value: Any):
        """Set one setting addressed as `section.key` (or a top-level key)"""
        keys = dotted.split(".")
        node = self.data
        defaults = DEFAULT_CONFIG
        for key in keys[:-1]:
            if key not in defaults or not isinstance(defaults[key], dict):
                raise ConfigError(f"Unknown setting section {dotted!r}")
            node = node[key]
            defaults = defaults[key]
        last = keys[-1]
        if last not in defaults or isinstance(defaults[last], dict):
            raise ConfigError(f"Unknown setting {dotted!r}")
        node[last] = value

    def get(self, section: str, key: Optional[str] = None) -> Any:
        return self.data[section] if key is None else self.data[section][key]

    def path(self, name: str) -> Optional[str]:
        value = self.data["paths"].get(name)
        if value is None:
            return None
        resolved = Path(value).expanduser()
        if not resolved.is_absolute():
            resolved = self.base_dir / resolved
        return str(resolved)

    def require_path(self, name: str) -> str:
        value = self.path(name)
        if value is None:
            raise ConfigError(f"Missing required path paths.{name}")
        return value

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    def extract_config(self) -> ExtractConfig:
        try:
            return ExtractConfig.from_dict(self.data["extract"])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid extract settings: {e}")

    def nmt_config(self, source_vocab_size: int, target_vocab_size: int) -> NmtConfig:
        values = dict(self.data["nmt"])
        values.update(source_vocab_size=source_vocab_size, target_vocab_size=target_vocab_size)
        return NmtConfig.from_dict(values)

    def grammar(self) -> SyntheticGrammar:
        try:
            return SyntheticGrammar.from_dict(self.data["synth"]["grammar"])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid synth.grammar settings: {e}")

    def to_dict(self) -> Dict[str, Any]:
        return copy.deepcopy(self.data)

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.data, f, indent=2, sort_keys=True)
            f.write("\n")

    def canonical_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()
