"""Exception types. Each carries the CLI exit code it maps to."""


class KacError(Exception):
    exit_code = 1


class ArgumentError(KacError, ValueError):
    """Malformed input: length mismatch, incompatible grids, bad config."""
    exit_code = 2


class LawError(KacError, ValueError):
    """Invalid initial-law name or parameters."""
    exit_code = 3


class DomainError(KacError, ValueError):
    """A bound or moment was requested outside its validity regime."""
    exit_code = 4

    def __init__(self, message, **info):
        super().__init__(message)
        self.info = info


class RangeError(KacError, OverflowError):
    """Size argument beyond a documented cap."""
    exit_code = 2


class NuCapExceeded(KacError, MemoryError):
    """The collision count drawn for some sample exceeded the configured cap."""
    exit_code = 5

    def __init__(self, t, nu, cap, chunk=None):
        where = "" if chunk is None else f" (chunk {chunk})"
        super().__init__(f"nu_t = {nu} exceeds cap {cap} at t = {t}{where}")
        self.t, self.nu, self.cap, self.chunk = t, nu, cap, chunk


class NumericalInstabilityError(KacError, ArithmeticError):
    exit_code = 6

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
