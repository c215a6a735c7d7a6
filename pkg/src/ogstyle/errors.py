"""Error types shared across the package.

The CLI maps each class onto a distinct process exit code, so raising the
right one matters for scripting.
"""


class OgstyleError(Exception):
    """Base class for package errors."""


class ConfigError(OgstyleError):
    """Bad configuration: malformed file, unknown key, out-of-range value."""


class MissingArtifactError(OgstyleError):
    """A required artifact (checkpoint, vocabulary, corpus file) is absent."""


class DataError(OgstyleError):
    """Input data violates a contract (empty corpus, wrong style, bad bytes)."""
