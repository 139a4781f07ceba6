"""Exception hierarchy shared by the simulator modules."""


class PCNError(Exception):
    """Base class for simulator errors."""


class InvalidParams(PCNError, ValueError):
    pass


class GenerationFailed(PCNError):
    pass


class NoSuchChannel(PCNError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class InsufficientBalance(PCNError):
    pass


class NoRoute(PCNError):
    pass


class ConfigError(PCNError):
    pass


class ReplayMismatch(PCNError):
    pass


class EmptyLog(PCNError, ValueError):
    pass
