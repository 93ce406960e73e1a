"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""


class ZeckError(Exception):
    exit_code = 1


class InputError(ZeckError, ValueError):
    """Malformed or inadmissible user input."""

    exit_code = 2

    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code


class ModelError(ZeckError):
    """The recurrence admits no model of the requested kind."""

    exit_code = 3


class UnsupportedModelError(ModelError):
    """A result is only available under an assumption the recurrence violates."""


class BudgetError(ZeckError):
    """A size guard on an exact computation was exceeded."""

    exit_code = 4


class InternalFault(ZeckError, RuntimeError):
    """A numerical or structural check that must hold for valid input failed."""

    exit_code = 1
