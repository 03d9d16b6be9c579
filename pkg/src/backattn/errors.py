"""Error taxonomy shared across the package.

Everything derives from ValueError so callers that do not care about the
distinction can still catch one base class; the CLI maps these onto its
exit codes.
"""


class FormatError(ValueError):
    """An input file does not match its declared format."""


class TagError(ValueError):
    """A tag string does not parse under the declared scheme grammar."""


class ValidationError(ValueError):
    """Data violates a declared numeric invariant (e.g. non-stochastic rows)."""


class ShapeError(ValueError):
    """Operand dimensions do not conform."""


class LabelError(ValueError):
    """A label is unknown to the parameter set using it."""


class DataConsistencyError(ValueError):
    """Two inputs that must describe the same data disagree."""

    def __init__(self, message, sentence_index=None):
        super().__init__(message)
        self.sentence_index = sentence_index
