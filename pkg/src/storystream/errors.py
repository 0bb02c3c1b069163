"""Exception types shared across the package."""

from __future__ import annotations


class StoryStreamError(Exception):
    """Base class for all package-specific errors."""


class EmptyCorpus(StoryStreamError):
    pass


class EmptyPool(StoryStreamError):
    pass


class MissingEmbedding(StoryStreamError):
    def __init__(self, doc_id: str):
        super().__init__(f"no embedding for document {doc_id!r}")
        self.doc_id = doc_id


class DimensionMismatch(StoryStreamError):
    pass


class DuplicateDocument(StoryStreamError):
    pass


class MissingGoldLabel(StoryStreamError):
    pass


class DegenerateData(StoryStreamError):
    """Training data cannot support the requested fit (e.g. one class only)."""


class TooFewMinority(DegenerateData):
    pass


class TooFewClusters(StoryStreamError):
    pass


class LineSearchFailure(StoryStreamError):
    pass


class IdSetMismatch(StoryStreamError):
    pass


class ParseError(StoryStreamError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc += f"{line}:"
        super().__init__(f"{loc} {message}" if loc else message)
        self.path = path
        self.line = line


class MissingField(ParseError):
    pass


class UnknownEvent(StoryStreamError):
    pass


class BadMagic(StoryStreamError):
    pass


class TruncatedFile(StoryStreamError):
    pass


class VersionMismatch(StoryStreamError):
    pass


class CorruptFile(StoryStreamError):
    pass
