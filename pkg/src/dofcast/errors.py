"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class CausalityError(RuntimeError):
    """The transmitter tried to read channel state it cannot know yet."""


class MulticastOverflow(RuntimeError):
    """More bits were offered to the multicast pipe than it can carry."""


class SingularDecodeError(ArithmeticError):
    """A decode system that should be invertible is singular."""


class InfeasiblePlan(DomainError):
    """A transmission scheme was paired with a configuration it cannot serve."""
