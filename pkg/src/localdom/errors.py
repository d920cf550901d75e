"""Exception taxonomy shared across the toolkit.

Every failure the library raises deliberately derives from LocaldomError so
callers (and the CLI) can fail closed with a single except clause.
"""


class LocaldomError(Exception):
    """Base class for all errors raised by this package on purpose."""


class UnknownClass(LocaldomError):
    """A rule referenced a semantic class or domain that is not present."""


class DegenerateGeometry(LocaldomError):
    """A geometric rule produced a zero-area region (empty band or disc)."""


class EmptyDomain(LocaldomError):
    """A local domain has no valid pixels to sample from."""


class TooSmall(LocaldomError):
    """An image is too small for the requested patch or tile size."""


class Diverged(LocaldomError):
    """Training produced non-finite losses for several consecutive steps."""


class OutOfRange(LocaldomError):
    """A scalar parameter fell outside its documented interval."""


class ShapeMismatch(LocaldomError):
    """Array arguments that must agree in shape do not."""


class MissingVae(LocaldomError):
    """An interpolation step was requested from a bundle without a mask VAE."""


class BadOverlap(LocaldomError):
    """Tile overlap is negative or not smaller than the tile size."""


class PlanMismatch(LocaldomError):
    """Tiles handed to stitching do not match the tile plan."""


class EmptySet(LocaldomError):
    """A metric was asked to aggregate over an empty collection."""


class BackendMissing(LocaldomError):
    """A named metric backend has not been registered."""


class MissingFile(LocaldomError):
    """A manifest entry points at a file that does not exist."""


class ChecksumMismatch(LocaldomError):
    """A manifest entry's checksum does not match the file on disk."""


class BadSchema(LocaldomError):
    """A config or manifest document is structurally invalid."""


class StageOrder(LocaldomError):
    """A pipeline stage was requested before its prerequisites ran."""


class SourceAccessViolation(LocaldomError):
    """A stage read a dataset file outside its allowed split."""
