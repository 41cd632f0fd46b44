"""Exception hierarchy. Each class carries a category used by the CLI exit codes."""


class SrsfpError(Exception):
    category = "error"
    exit_code = 1


class FormatError(SrsfpError, ValueError):
    category = "format"
    exit_code = 2


class ValidationError(SrsfpError, ValueError):
    category = "validation"
    exit_code = 3


class OrderingError(ValidationError):
    category = "ordering"


class GeometryError(SrsfpError, ValueError):
    category = "geometry"
    exit_code = 4


class AmbiguityError(SrsfpError, ValueError):
    category = "ambiguity"
    exit_code = 5


class InsufficientDataError(SrsfpError, ValueError):
    category = "insufficient-data"
    exit_code = 6


class ConfigError(SrsfpError, ValueError):
    category = "config"
    exit_code = 7


class ProvenanceError(SrsfpError):
    category = "provenance"
    exit_code = 8


class DivergenceError(SrsfpError, FloatingPointError):
    category = "divergence"
    exit_code = 9


class CheckpointError(SrsfpError):
    category = "checkpoint"
    exit_code = 10
