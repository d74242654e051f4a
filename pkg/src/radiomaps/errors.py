"""Exception types shared across the package."""


class RadiomapsError(Exception):
    """Base class for all package errors."""


class MalformedRaster(RadiomapsError):
    """Raster header/payload is structurally invalid."""


class DimensionMismatch(RadiomapsError):
    """Grids that must share shape/resolution do not."""


class NegativeHeight(RadiomapsError):
    """Height raster contains negative or non-finite values."""


class OutOfBounds(RadiomapsError):
    """Queried coordinate lies outside the grid extent."""


class ZeroDirection(RadiomapsError):
    """Direction vector with (near-)zero norm where one is required."""


class QuadratureNonConvergence(RadiomapsError):
    """Numerical integration failed to reach the requested tolerance."""


class TxOutOfBounds(RadiomapsError):
    """Transmitter position lies outside the scene extent."""


class EmptyPathSet(RadiomapsError):
    """Power combination requested for zero paths."""


class DuplicateSampleId(RadiomapsError):
    """Two dataset samples share an id."""


class MissingFile(RadiomapsError):
    """A referenced dataset file does not exist."""


class NormalizationRange(RadiomapsError):
    """Channel values fall outside the configured global bounds."""


class ManifestVersionMismatch(RadiomapsError):
    """Dataset manifest version is not the one this code writes/reads."""


class PipelineError(RadiomapsError):
    """A pipeline stage failed; message names the offending sample/scene."""
