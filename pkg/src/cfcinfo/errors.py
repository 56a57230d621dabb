"""Exception hierarchy shared by all modules."""


class CfcError(Exception):
    """Base class for library errors."""

    kind = "error"


class ConfigurationError(CfcError, ValueError):
    """Malformed circuit, layout, or run configuration."""

    kind = "configuration"


class DomainError(CfcError, ValueError):
    """A numeric argument lies outside its admissible range."""

    kind = "domain"


class UnsupportedConfigurationError(CfcError):
    """The operation exists but not for this kind of circuit."""

    kind = "unsupported"


class DegeneratePostSelectionError(CfcError):
    """Post-selection would renormalize by a vanishing survival probability."""

    kind = "degenerate_postselection"


class UndecidableChannelError(CfcError):
    """The two bit values produce identical statistics."""

    kind = "undecidable_channel"


class StabilityError(ConfigurationError):
    """Time step exceeds the explicit integrator's stability bound."""

    kind = "stability"
