"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
RemoteError -> 4. Anything else is a genuine bug and is allowed to crash.
"""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all expected failures raised by this package."""


class ConfigError(ToolkitError):
    """Invalid configuration: bad flag combinations, missing paths, bad values."""


class DataError(ToolkitError):
    """Input data violates a documented contract."""


class CorpusEncodingError(DataError):
    """Corpus bytes are not valid UTF-8."""


class CorpusParseError(DataError):
    """Corpus is not well-formed JSON."""

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset


class SchemaError(DataError):
    """Corpus or ontology content violates the documented schema."""


class SplitError(DataError):
    """A split request produced an empty or impossible training set."""


class RetrievalError(DataError):
    """Retrieval could not produce any eligible example."""


class AlignmentError(DataError):
    """Predictions and gold states do not cover the same (dialogue, turn) set."""


class PromptError(DataError):
    """A prompt string does not conform to the block grammar."""


class RemoteError(ToolkitError):
    """Failure talking to the model server."""


class TransportError(RemoteError):
    """Connection-level failure after exhausting retries (retryable class)."""


class ProtocolError(RemoteError):
    """The server answered, but the payload violates the wire contract."""
