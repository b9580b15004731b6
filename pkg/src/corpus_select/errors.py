"""Exception and warning types shared across the toolkit."""

from __future__ import annotations


class CorpusSelectError(Exception):
    """Base class for all toolkit errors."""


class MalformedLineError(CorpusSelectError):
    """A JSON-lines record could not be parsed or lacks a string "text" field."""

    def __init__(self, line_no: int, reason: str) -> None:
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class Utf8Error(CorpusSelectError):
    """An input line is not valid UTF-8."""

    def __init__(self, line_no: int) -> None:
        super().__init__(f"line {line_no}: invalid UTF-8")
        self.line_no = line_no


class EmptyCorpusError(CorpusSelectError):
    """An operation that needs at least one sentence received an empty corpus."""


class EmptySelectionError(CorpusSelectError):
    """A metric that needs at least one selected sentence received none."""


class UnknownStrategyError(CorpusSelectError):
    """Requested selection strategy is not registered."""

    def __init__(self, name: str, registered: list[str]) -> None:
        super().__init__(
            f"unknown strategy {name!r}; registered: {', '.join(registered)}"
        )
        self.name = name
        self.registered = registered


class MismatchedCorporaError(CorpusSelectError):
    """Selection reports being compared do not share one out-domain corpus."""


class MissingManifestError(CorpusSelectError):
    """A selection manifest path does not exist or is unreadable."""


class EmbeddingServiceUnavailableError(CorpusSelectError):
    """The embedding endpoint kept failing after the retry budget was spent."""


class EmbeddingDimensionMismatchError(CorpusSelectError):
    """The embedding service returned vectors of inconsistent dimension."""


class MalformedResponseError(CorpusSelectError):
    """The embedding service returned a response we cannot interpret."""


class ShortfallWarning(UserWarning):
    """Fewer candidates survived filters/thresholds than the requested count."""
