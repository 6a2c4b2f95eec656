"""Exception hierarchy. Every error carries a short greppable code."""


class RelayNetError(Exception):
    code = "E_RELAYNET"
    exit_code = 2

    def __str__(self):
        return f"{self.code}: {super().__str__()}"


class ParseError(RelayNetError):
    code = "E_PARSE"

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CycleError(RelayNetError):
    code = "E_CYCLE"


class RoleError(RelayNetError):
    code = "E_ROLE"


class ArityError(RelayNetError):
    code = "E_ARITY"


class GainError(RelayNetError):
    code = "E_GAIN"


class ReachabilityError(RelayNetError):
    code = "E_REACH"


class ModeError(RelayNetError):
    code = "E_MODE"


class DistributionError(RelayNetError):
    code = "E_DIST"


class SteinerError(RelayNetError):
    code = "E_STEINER"


class CapError(RelayNetError):
    """A configured computation cap would be exceeded."""

    code = "E_CAP"
    exit_code = 3


class EmptyTypicalSetError(RelayNetError):
    code = "E_TYPICAL"
    exit_code = 3


class PreconditionError(RelayNetError):
    code = "E_PRECONDITION"
