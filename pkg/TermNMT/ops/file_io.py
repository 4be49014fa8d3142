"""
Small file helpers shared by the operation classes
"""

import json
from typing import Any, List

from TermNMT.corpus.corpus import ParallelPair, load_tagged_corpus
from TermNMT.terms.term_align import PhraseTable, load_phrase_table


def write_text(atomic_write_file, path: str, text: str):
    atomic_write_file(path, lambda f: f.write(text.encode("utf-8")))


def write_json(atomic_write_file, path: str, data: Any):
    write_text(atomic_write_file, path, json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def read_corpus(path: str) -> List[ParallelPair]:
    with open(path, "r", encoding="utf-8") as f:
        return load_tagged_corpus(f)


def read_phrase_table(path: str, prob_column: int = 0) -> PhraseTable:
    with open(path, "r", encoding="utf-8") as f:
        return load_phrase_table(f, prob_column)


def read_token_lines(path: str) -> List[List[str]]:
    """One whitespace-tokenized sentence per line; empty lines give empty sentences"""
    with open(path, "r", encoding="utf-8") as f:
        return [line.split() for line in f.read().splitlines()]
