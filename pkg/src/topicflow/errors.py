"""Exception hierarchy. The CLI maps these onto its exit-code contract."""


class TopicflowError(Exception):
    """Base class for all engine errors."""


class ConfigError(TopicflowError):
    """Invalid configuration or arguments (CLI exit code 1)."""


class StageError(TopicflowError):
    """A pipeline stage failed at runtime (CLI exit code 2)."""


class IntegrityError(TopicflowError):
    """Sampler state violated an invariant; fail fast, never repair."""


class EmptyCorpusError(TopicflowError):
    """An operation that needs at least one document/token got none."""


class EmptyDocumentError(TopicflowError):
    """Document is empty after preprocessing; caller may drop it."""


class FetchError(TopicflowError):
    """Remote record harvesting failed."""


class RetriableFetchError(FetchError):
    """Transient network failure; carries the page cursor for resuming."""

    def __init__(self, message, cursor=0):
        super().__init__(message)
        self.cursor = cursor


class FetchParseError(FetchError):
    """Malformed remote response; names the offending record."""


class QueryError(TopicflowError):
    """A graph/topic query referenced something that does not exist."""
