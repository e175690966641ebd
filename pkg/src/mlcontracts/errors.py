"""Exception hierarchy shared by every module."""


class ContractError(Exception):
    """Base class for errors raised by this package."""


class DomainError(ContractError, ValueError):
    """An argument lies outside the domain of the operation."""


class BracketError(DomainError):
    """A root-finding bracket does not contain a sign change."""


class InfeasibleStartError(DomainError):
    """The starting point handed to the barrier solver is not strictly feasible."""


class ConstructionInapplicableError(DomainError):
    """A closed-form construction does not apply to the given parameters."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class UndefinedBenchmarkError(DomainError):
    """The first-best benchmark is non-positive so a ratio is meaningless."""


class ProtocolError(ContractError, RuntimeError):
    """The multi-round protocol was driven in an inconsistent way."""


class ConvergenceError(ContractError, RuntimeError):
    """A numerical routine failed to reach its tolerance."""
