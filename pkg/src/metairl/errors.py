"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called outside its documented preconditions."""


class GenerationError(RuntimeError):
    """Demonstration generation failed (oracle success rate too low)."""
