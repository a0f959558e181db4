"""Exception hierarchy shared across the package.

Every error carries a short ``category`` token that the CLI prints in a
single machine-parsable line before exiting nonzero.
"""


class PscfLabError(Exception):
    """Base class for all pscf-lab errors."""

    category = "internal"


class DimensionError(PscfLabError):
    """Invalid or mismatched sizes (candidate counts, vector lengths)."""

    category = "dimension"


class CandidateError(PscfLabError):
    """Candidate index out of range."""

    category = "candidate"


class VoterError(PscfLabError):
    """Voter index out of range, or an operation that would empty a profile."""

    category = "voter"


class StateError(PscfLabError):
    """Operation invoked on an object in the wrong state."""

    category = "state"


class ConfigError(PscfLabError):
    """Invalid, incomplete, or inconsistent configuration."""

    category = "config"


class FormatError(PscfLabError):
    """Unreadable or version-mismatched file content."""

    category = "format"


class InternalError(PscfLabError):
    """An invariant that no input should be able to break was broken."""

    category = "internal"
