"""Exception hierarchy shared by every huffrev module."""


class HuffrevError(Exception):
    """Base class for all library errors."""


class OversizedBlock(HuffrevError, ValueError):
    """A duplexing input does not fit a single padded rate block."""


class DuplexError(HuffrevError):
    """Misuse of a duplex context, e.g. reading output before any call."""


class EmptyInput(HuffrevError, ValueError):
    pass


class InvalidArity(HuffrevError, ValueError):
    pass


class PlanError(HuffrevError, ValueError):
    """Invalid vehicle classes or plan document."""


class DuplicateCertificate(HuffrevError):
    pass


class StratumFull(HuffrevError):
    """The class stratum reached its planned capacity; the CA must re-plan."""


class UnknownClass(HuffrevError):
    pass


class NotFound(HuffrevError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return Exception.__str__(self)


class EpochGap(HuffrevError):
    """Delta does not follow the replica's epoch; a full snapshot is needed."""


class RootMismatch(HuffrevError):
    pass


class BadSignature(HuffrevError):
    pass


class MalformedFrame(HuffrevError, ValueError):
    pass


class NotBootstrapped(HuffrevError):
    pass


class TransportError(HuffrevError, OSError):
    pass
