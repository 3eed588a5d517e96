"""Exception hierarchy. Everything here maps to CLI exit code 2 (operational
error); traceability findings are ordinary return values, never exceptions."""


class ReqtocodeError(Exception):
    """Base class for all tool-level failures."""


class ConfigError(ReqtocodeError):
    """Bad or missing configuration."""


class ParseError(ReqtocodeError):
    """Malformed input file; message names file and line."""


class ValidationError(ReqtocodeError):
    """Structurally valid input violating an invariant (duplicate id, bad status...)."""


class TransportError(ReqtocodeError):
    """Endpoint unreachable or HTTP-level failure."""


class SchemaError(ReqtocodeError):
    """Payload does not match the documented schema; message carries a field path."""


class PartitionError(ReqtocodeError):
    """Requirement matched zero rules, or more than one."""


class ResurrectionError(ReqtocodeError):
    """A removed requirement id reappeared with active intent."""


class CollisionError(ReqtocodeError):
    """Two requirements normalize to the same constant name."""


class PlacementError(ReqtocodeError):
    """Artifact root is not inside a version-controlled working tree."""


class ForeignFileError(ReqtocodeError):
    """A file without the generation sentinel sits inside the artifact root."""


class GenerationError(ReqtocodeError):
    """Template or profile problem during artifact generation."""


class VcsError(ReqtocodeError):
    """Repository, revision or path lookup failure."""
