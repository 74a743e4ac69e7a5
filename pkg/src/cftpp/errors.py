class CftppError(Exception):
    """Base class for precondition violations raised by the samplers."""


class DominatingRateError(CftppError):
    """An intensity exceeded the dominating rate used for thinning."""


class ObservationError(CftppError):
    """An observation has zero likelihood or is otherwise malformed."""


class ConfigError(CftppError):
    """A configuration document could not be interpreted."""
