"""Exception types shared across the package.

Argument and configuration problems raise ValueError (or the ConfigError
subclass); a state that leaves the admissible configuration set (a coincident
particle pair) raises DomainError.  The CLI maps these to distinct exit codes.
"""


class DomainError(RuntimeError):
    """The particle state left the admissible set: some pair coincides."""


class ConfigError(ValueError):
    """A run configuration file is malformed or inconsistent."""
