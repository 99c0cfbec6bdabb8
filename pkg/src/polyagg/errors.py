"""Exception hierarchy for the polyagg toolkit."""


class PolyaggError(Exception):
    """Base class for all toolkit errors."""


class MeshFormatError(PolyaggError):
    """Malformed mesh file (carries a line number where possible)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedFormatError(PolyaggError):
    """Mesh file version or dialect we deliberately do not read."""


class ValidationError(PolyaggError):
    """Input data violates a structural invariant."""


class NonManifoldError(ValidationError):
    """A triangular face is shared by more than two tetrahedra."""


class ContractViolationError(PolyaggError):
    """An operation was called outside its preconditions."""


class ShapeError(PolyaggError):
    """Tensor or matrix dimensions do not agree."""


class DegeneratePartitionError(PolyaggError):
    """All probability mass collapsed into a single class."""


class DegenerateGeometryError(PolyaggError):
    """Point set has no usable geometric extent."""


class CheckpointError(PolyaggError):
    """Checkpoint file is unreadable or does not match the expected model."""


class ConfigurationError(PolyaggError):
    """Run configuration is inconsistent with the provided data."""


class TrainingError(PolyaggError):
    """Training aborted (e.g. non-finite gradients)."""
