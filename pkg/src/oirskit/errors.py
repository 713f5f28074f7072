"""Exception types shared across the toolkit."""


class OirsError(Exception):
    """Base class for all toolkit errors."""


class DegenerateGeometryError(OirsError):
    """Mirror normal is undefined (target lies along the incident ray)."""


class ParallelNormalsError(OirsError):
    """Rotation axis is undefined because the two normals are parallel."""


class EmptyAimError(OirsError):
    """An aim solution with no elements was supplied."""


class LayoutMismatchError(OirsError):
    """Ring layout does not cover every element of the array."""


class SamplingError(OirsError):
    """Field grid sampling is incompatible with the pixel pitch."""


class InfeasibleTargetError(OirsError):
    """Requested far-field target exceeds the available energy budget."""


class InfeasibleRatioError(OirsError):
    """No element grouping meets the requested power ratio tolerance."""

    def __init__(self, message, best_deviation=None, best_partition=None):
        super().__init__(message)
        self.best_deviation = best_deviation
        self.best_partition = best_partition


class PartitionTooLargeError(OirsError):
    """Exhaustive grouping search would exceed the enumeration cap."""


class OverlappingRegionsError(OirsError):
    """Split regions overlap geometrically."""


class RegionOutOfWindowError(OirsError):
    """A split region does not fit inside the target grid window."""


class OutOfWindowError(OirsError):
    """Receiver aperture lies wholly outside the power-density map."""


class ConfigError(OirsError):
    """Scenario configuration failed validation."""


class ComputeError(OirsError):
    """A computation failed for reasons other than bad configuration."""
