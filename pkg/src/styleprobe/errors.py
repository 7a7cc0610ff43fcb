"""Exception hierarchy shared across the toolkit."""


class StyleProbeError(Exception):
    """Base class for all toolkit errors."""


class ParseError(StyleProbeError):
    """Malformed input file (JSONL, CoNLL-U, CSV)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IntegrityError(StyleProbeError):
    """Input violates a structural constraint (duplicate ids, bad spans)."""


class ProviderError(StyleProbeError):
    """Embedding provider failure: missing ids, transport, bad vectors."""


class InfeasibleError(StyleProbeError):
    """Sampling or evaluation request that cannot be satisfied by the data."""
