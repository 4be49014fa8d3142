"""
Exception hierarchy for TermNMT.

Library code raises these; the command layer (`TermNMT.ops`, `TermNMT.ctrl`)
catches them and turns them into (success, message) results.
"""

from typing import Optional


class TermNMTError(Exception):
    """Base class for all TermNMT errors"""


class _LineError(TermNMTError, ValueError):
    """Input format error tied to a 1-based line number"""

    kind = "input"

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"{self.kind} line {line_number}: {message}"
        super().__init__(message)


class CorpusFormatError(_LineError):
    kind = "corpus"


class PhraseTableFormatError(_LineError):
    kind = "phrase table"


class NBestFormatError(_LineError):
    kind = "n-best"


class VocabularyError(TermNMTError, ValueError):
    pass


class AlignmentMissingError(TermNMTError):
    """A word-alignment operation was asked for on a pair without alignment"""


class ModelError(TermNMTError, ValueError):
    pass


class TrainingDivergedError(TermNMTError):
    """Training produced a non-finite loss"""


class EvaluationError(TermNMTError, ValueError):
    pass


class ConfigError(TermNMTError, ValueError):
    pass
