"""Exception types shared across the package."""


class PecSimError(Exception):
    """Base class for all pecsim errors."""


class SingularParameterError(PecSimError, ValueError):
    """Noise parameters make a mitigation coefficient system singular
    (e.g. SPAM fidelity at 0.5, or an ill-conditioned channel inverse)."""


class UnrepresentableMomentsError(PecSimError, ValueError):
    """Requested mean/variance pair cannot be realized by a Beta distribution."""


class ModelMismatchError(PecSimError, RuntimeError):
    """Observed channel response violates the multilinear model assumption."""


class CountsParseError(PecSimError, ValueError):
    """Counts file is malformed. Carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
