"""Exception hierarchy shared by all pipeline stages."""


class TubegroundError(Exception):
    """Base class for all library errors."""


class EmptyInputError(TubegroundError):
    """An input that must be non-empty was empty (blank sentence, no frames)."""


class MalformedInputError(TubegroundError):
    """Structurally invalid input: bad schema, non-contiguous frames, duplicate ids."""


class NumericalDegeneracyError(TubegroundError):
    """A numerical routine hit a singular or non-finite intermediate state."""


class SchemaError(MalformedInputError):
    """An artifact file failed schema validation; message names file and field."""


class ConfigError(TubegroundError):
    """Invalid configuration: unknown key, bad value, or version mismatch."""


class ConfigVersionError(ConfigError):
    """Config file declares a format version this tool does not support."""
