"""Exception hierarchy shared by all modules."""


class PointCoupleError(Exception):
    """Base class for library errors."""


class NonRepresentableDevice(PointCoupleError):
    """Scattering matrix has an eigenphase at pi; no finite coupling matrix exists."""


class DimensionMismatch(PointCoupleError, ValueError):
    pass


class GridOverflow(PointCoupleError):
    """Envelope support would leave the position grid."""


class UnknownFrequencyLabel(PointCoupleError, KeyError):
    pass


class IndexOutOfRange(PointCoupleError, IndexError):
    pass


class BondExplosion(PointCoupleError):
    """MPS bond dimension exceeded the configured cap."""


class ConfigError(PointCoupleError, ValueError):
    """Invalid configuration; `field` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
