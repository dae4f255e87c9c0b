"""Exception hierarchy shared by the library and the CLI."""


class QftlabError(Exception):
    """Base class for every error raised by qftlab."""


class StructureError(QftlabError, ValueError):
    """Operands do not belong to the same group, field or ring."""


class CapExceeded(QftlabError):
    """A dense construction was requested for a group above the dense cap."""


class PreconditionError(QftlabError):
    """An operation's precondition (e.g. basis compatibility) does not hold."""


class IntegrityError(QftlabError):
    """A state lost its normalisation or a measurement was not deterministic."""


class ParseError(QftlabError, ValueError):
    """Malformed group/field/ring text form."""

    def __init__(self, message, text="", position=0):
        super().__init__(f"{message} (at position {position} in {text!r})")
        self.text = text
        self.position = position
