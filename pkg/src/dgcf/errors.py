"""Exception types shared across the package."""


class DgcfError(Exception):
    """Base class for anticipated failures (bad inputs, bad files, divergence)."""


class ParseError(DgcfError):
    """Malformed interaction file; message carries the offending line number."""


class DataError(DgcfError):
    """Dataset-level problem: empty input, dimension mismatch, unknown token."""


class ModelFileError(DgcfError):
    """Corrupt or incompatible model file."""


class DivergenceError(DgcfError):
    """Training produced non-finite values."""


class ConfigError(DgcfError):
    """Invalid configuration value or flag combination."""
