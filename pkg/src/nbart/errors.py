"""Exception types shared across the package."""


class NbartError(Exception):
    pass


class InvalidParams(NbartError, ValueError):
    pass


class UnknownIdentity(NbartError, KeyError):
    pass


class DoubleProduce(NbartError, RuntimeError):
    pass


class NonQuiescent(NbartError, RuntimeError):
    pass


class ScenarioMismatch(NbartError, ValueError):
    pass


class EnumerationBudgetExceeded(NbartError, RuntimeError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
