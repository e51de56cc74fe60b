"""
Exception hierarchy for the tensor network structure search pipeline.
"""


class TNSearchError(Exception):
    """Base class for every error raised by tn_search."""


class StructureMismatchError(TNSearchError, ValueError):
    """Cores, shapes and structures disagree (order, bond or physical dimension)."""


class InvalidStructureError(TNSearchError, ValueError):
    """A rank vector, permutation or bound is not valid."""


class NumericalFailureError(TNSearchError, RuntimeError):
    """Core fitting produced a non-finite loss."""

    def __init__(self, structure, detail: str = "non-finite loss"):
        self.structure = structure
        super().__init__(f"Numerical failure fitting structure {list(structure.ranks)}: {detail}")


class SearchSpaceTooLargeError(TNSearchError, ValueError):
    """Exhaustive enumeration was asked to cover too many structures."""


class TemplateError(TNSearchError, KeyError):
    """A prompt template has a placeholder nobody filled in."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "template error"


class SolutionParseError(TNSearchError, ValueError):
    """An LLM reply does not contain a usable structure."""


class MissingSolutionLineError(SolutionParseError):
    pass


class SolutionArityError(SolutionParseError):
    pass


class NonIntegerRankError(SolutionParseError):
    pass


class RankOutOfBoundsError(SolutionParseError):
    pass


class LLMError(TNSearchError, RuntimeError):
    """Base class for chat-completion failures."""


class LLMRequestError(LLMError):
    """Transport or HTTP failure talking to the chat endpoint."""

    def __init__(self, message: str, status: int | None = None):
        self.status = status
        super().__init__(message)


class LLMAuthError(LLMRequestError):
    """The endpoint rejected the credentials."""


class LLMResponseError(LLMError):
    """The endpoint answered with a body we cannot read."""


class ScriptExhaustedError(LLMError):
    """A scripted client ran out of canned replies."""


class BundleError(TNSearchError, OSError):
    """A tensor bundle on disk is missing or inconsistent."""


class UnsupportedDtypeError(BundleError):
    pass


class ConfigError(TNSearchError, ValueError):
    """Run configuration is invalid or incomplete."""


class ReportError(TNSearchError, RuntimeError):
    """Run logs are missing or unreadable."""
