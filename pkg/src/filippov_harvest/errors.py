"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A model parameter or configuration value violates its constraints."""


class ConfigError(ParameterError):
    """Command-line / file configuration is inconsistent or malformed."""


class NumericsError(RuntimeError):
    """A numerical procedure failed (degenerate denominator, step underflow, NaN)."""


class AmbiguousAttractorError(NumericsError):
    """Two candidate attractors lie within the detection radius simultaneously;
    the caller must shrink the radius."""
