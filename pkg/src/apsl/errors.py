"""Exception hierarchy shared across the package."""


class ApslError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ApslError):
    """Tensor shapes are incompatible for the requested operation."""


class ContractError(ApslError):
    """An operation was called outside its documented contract."""


class ConfigError(ApslError):
    """Invalid configuration value or combination."""


class TrainingError(ApslError):
    """Training diverged or received unusable gradients."""


class CorpusError(ApslError):
    """Base class for corpus loading/validation failures."""


class ParseError(CorpusError):
    """A corpus file line could not be parsed; carries the line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class ReferentialError(CorpusError):
    """An engagement references a claim or parent outside its group."""


class CycleError(CorpusError):
    """A parent chain loops instead of reaching the claim root."""


class BalanceError(CorpusError):
    """Class balancing is impossible (a class has zero members)."""


class StructureError(ApslError):
    """A propagation tree violates its structural invariants."""


class FormatError(ApslError):
    """An auxiliary file (embeddings, checkpoint) is malformed."""


class MissingEmbeddingError(ApslError):
    """A required id has no vector in the precomputed store."""


class SelectionError(ApslError):
    """An analysis selection is empty or degenerate."""
