from .exceptions import (
    ArtifactIOError,
    ConfigurationError,
    DataFormatError,
    DomainError,
    ModelVersionError,
    TrackguardError,
)

__all__ = [
    "TrackguardError",
    "ConfigurationError",
    "DomainError",
    "DataFormatError",
    "ModelVersionError",
    "ArtifactIOError",
]
