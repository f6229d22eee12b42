"""Exception hierarchy shared by all modules."""


class SemigenError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SemigenError):
    """Bad user input: malformed expressions, files or parameters (exit code 2)."""


class ExprSyntaxError(ConfigError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifier(ConfigError):
    pass


class DomainError(ConfigError):
    """An expression was evaluated outside its domain (log of 0, division by 0, ...)."""


class TailNotCertifiable(SemigenError):
    pass


class PrecisionLimit(SemigenError):
    pass


class ImageEnvelopeError(SemigenError):
    pass


class NoDomination(SemigenError):
    def __init__(self, j):
        super().__init__(f"no domination: witness j={j}")
        self.j = j


class OutsideCertifiedDisc(SemigenError):
    pass


class IncreaseN(SemigenError):
    pass


class ConstructionInapplicable(SemigenError):
    pass


class NotCertified(SemigenError):
    """No certificate could be produced for a requested evaluation."""


class ErrorBudgetExhausted(SemigenError):
    def __init__(self, message, step):
        super().__init__(f"{message} (step {step})")
        self.step = step
