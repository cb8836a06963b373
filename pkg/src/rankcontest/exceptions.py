class ContestError(ValueError):
    """Base class for errors raised by rankcontest."""


class DomainError(ContestError):
    """An argument lies outside the domain of the operation."""


class UnsupportedCaseError(ContestError):
    """The input is valid but the requested quantity is not defined for it."""


class ConfigError(ContestError):
    """A market config file is malformed.

    ``field`` is a dotted path into the JSON document (e.g. ``contests.1.prizes``)
    and ``line`` the source line when known.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
