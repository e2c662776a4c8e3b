"""
Exception hierarchy shared by every service
"""


class HctError(Exception):
    """Base class for all errors raised by this package"""


class DimensionError(HctError, ValueError):
    """Tensor extents do not line up"""


class NonFiniteError(HctError, ArithmeticError):
    """NaN or Inf showed up where finite values are required"""


class ConfigError(HctError, ValueError):
    """Invalid configuration value or unknown configuration key"""


class GradCheckError(HctError):
    """Gradient check could not be carried out (e.g. non-deterministic loss)"""


class DatasetError(HctError):
    """Dataset directory or sample is malformed"""


class MetricError(HctError, ValueError):
    """Metric is undefined for the given inputs"""


class CheckpointError(HctError):
    """Base class for checkpoint IO failures"""


class CheckpointFormatError(CheckpointError):
    """Bad magic bytes, corrupt header or unknown parameter names"""


class CheckpointVersionError(CheckpointError):
    """Checkpoint written by an unsupported format version"""


class CheckpointShapeError(CheckpointError):
    """Stored parameter shape differs from the model's"""


class CheckpointTruncatedError(CheckpointError):
    """File ends before all declared parameter blocks"""
