"""Exception hierarchy shared across the package."""


class TvFactorError(Exception):
    """Base class for all tvfactor errors."""


class NoOverlap(TvFactorError):
    """Date ranges of the panels being aligned do not intersect."""


class GapInSeries(TvFactorError):
    """A monthly series has an interior missing value or a date gap."""


class MissingSeries(TvFactorError):
    """A requested series label is not present in the panel."""


class TooShort(TvFactorError):
    """Not enough observations for the requested computation."""


class RaggedRow(TvFactorError):
    """A CSV data row has a different width than its section header."""


class NoMonthlySection(TvFactorError):
    """No monthly (YYYYMM-keyed) section was found in the file."""


class FetchFailed(TvFactorError):
    """Download failed or the dataset is missing from an offline cache."""


class CorruptDataset(TvFactorError):
    """A fetched file failed basic shape/sanity checks."""


class ShapeError(TvFactorError):
    """Array or panel dimensions are inconsistent."""


class Singular(TvFactorError):
    """A linear system is rank deficient or not positive definite."""


class SelectionFailed(TvFactorError):
    """No grid point produced a finite selection criterion."""


class ConfigError(TvFactorError):
    """Invalid configuration value."""


class ReplicateFailed(TvFactorError):
    """A bootstrap replicate solve produced an invalid result."""

    def __init__(self, index, message=""):
        self.index = index
        super().__init__(message or f"bootstrap replicate {index} failed")
