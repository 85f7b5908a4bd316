class ValidationError(ValueError):
    """Input rejected: malformed, inconsistent or out of range."""


class InfeasibleError(ValidationError):
    """Request is well formed but cannot be met, e.g. budget larger than the pool."""
