"""Exception hierarchy shared by the numeric modules and the CLI."""


class TestRollError(ValueError):
    """Base class for all package errors."""

    __test__ = False  # keep pytest from collecting this as a test class


class DomainError(TestRollError):
    """An argument lies outside the domain of the quantity requested."""


class UnsupportedRepresentationError(DomainError):
    """The tilted walk representation was requested for a boundary walk."""


class UndefinedCriterionError(TestRollError):
    """A criterion is undefined at the requested state (e.g. zero oracle welfare)."""


class ConfigurationError(TestRollError):
    """A search or run configuration is invalid."""
