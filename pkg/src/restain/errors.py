"""Exception taxonomy shared by the library and the CLI.

Every error carries a machine-readable ``kind`` tag and the CLI exit code
of its category: 2 for input validation, 3 for numerical failure, 4 for I/O.
"""


class RestainError(Exception):
    """Base class for all toolkit errors."""

    kind = "error"
    exit_code = 2

    def __init__(self, message, kind=None):
        super().__init__(message)
        if kind is not None:
            self.kind = kind


class ValidationError(RestainError):
    """Invalid input value, shape or file content."""

    kind = "validation"
    exit_code = 2


class NumericalError(RestainError):
    """A numerically degenerate situation the caller may want to recover from."""

    kind = "numerical"
    exit_code = 3


class RankDeficientStainsError(NumericalError):
    """Two stain color vectors are parallel; unmixing is ill-posed."""

    kind = "rank_deficient_stains"


class NonPsdCovarianceError(NumericalError):
    """A covariance (or covariance product) has a significantly negative eigenvalue."""

    kind = "non_psd_covariance"


class BlankTileError(ValidationError):
    """Tile carries no stain signal; estimation has nothing to fit."""

    kind = "blank_tile"


class PlacementError(ValidationError):
    """Synthetic cell placement could not fit the requested cell count."""

    kind = "placement_failed"


class ProfileNotFoundError(ValidationError):
    kind = "profile_not_found"


class ProfileFormatError(ValidationError):
    kind = "profile_format"


class CmapFormatError(ValidationError):
    """Malformed CMAP container. ``kind`` pins the exact failure:
    ``bad_magic``, ``truncated_payload``, ``oversized_payload``,
    ``bad_dimensions`` or ``dimension_overflow``."""

    kind = "cmap_format"


class ManifestFormatError(ValidationError):
    kind = "manifest_format"


class UnknownDomainError(ValidationError):
    kind = "unknown_domain"


class MissingTileError(ValidationError):
    kind = "missing_tile"


class NoCellsError(ValidationError):
    """Ground-truth label map is entirely background."""

    kind = "no_cells"


class StorageError(RestainError):
    """Filesystem failure while reading or writing outputs."""

    kind = "io"
    exit_code = 4
