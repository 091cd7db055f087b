"""Exception hierarchy shared across the package."""


class PlangroundError(Exception):
    """Base class for all errors raised by this package."""


class SceneFormatError(PlangroundError):
    """Scene or config file could not be parsed."""


class SceneValidationError(PlangroundError):
    """Parsed scene violates an invariant; message names the offending field."""


class GenerationError(PlangroundError):
    """Synthetic scene generation exhausted its retry budget."""


class StrategyError(PlangroundError):
    """Invalid collection-strategy parameters or an unusable scene."""


class DetectorConfigError(PlangroundError):
    """Inconsistent detector configuration (e.g. noise without a vocabulary)."""


class PromptError(PlangroundError):
    """Prompt template and arguments do not agree."""


class BackendError(PlangroundError):
    """Text-generation backend failed (transport, status, or empty reply)."""

    def __init__(self, message: str, *, endpoint: str | None = None):
        super().__init__(message)
        self.endpoint = endpoint


class PlanParseError(PlangroundError):
    """No action steps could be extracted from the completion text."""

    def __init__(self, message: str, *, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class VoteError(PlangroundError):
    """Base class for annotation-store failures."""


class UnknownItemError(VoteError):
    """Vote refers to an item that is not in the evaluation run."""


class DuplicateVoteError(VoteError):
    """Annotator already voted on this item."""


class InvalidVoteError(VoteError):
    """Vote record violates its invariants (e.g. failure without a type)."""


class StoreCorruptionError(VoteError):
    """Vote log on disk could not be replayed."""


class ConfigError(PlangroundError):
    """Experiment configuration is invalid or references missing files."""


class DatasetError(PlangroundError):
    """Dataset assembly failed (bad split, missing room type, bad factor)."""
