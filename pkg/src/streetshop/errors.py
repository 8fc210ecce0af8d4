"""Exception types shared across the package."""


class ManifestFormatError(ValueError):
    """Manifest file does not parse as the line-delimited manifest format."""


class ManifestValidationError(ValueError):
    """Manifest parsed but violates an invariant (duplicate ids, missing files, ...)."""


class StratificationError(ValueError):
    """A category has too few products to be split."""


class ImageDecodeError(ValueError):
    """Input is not a decodable RGB image."""


class CheckpointFormatError(ValueError):
    """Checkpoint container is corrupt or has the wrong magic."""


class IndexFormatError(ValueError):
    """Index file is corrupt or has the wrong magic."""


class EmptyIndexError(ValueError):
    """Query issued against an index with no entries."""


class TargetSamplingError(ValueError):
    """Adversarial target sampling is impossible (e.g. single-product dataset)."""


class TrainingDivergedError(RuntimeError):
    """Training aborted because a loss became non-finite."""


class FingerprintMismatchError(RuntimeError):
    """Index was built by a different embedder checkpoint than the active one."""
