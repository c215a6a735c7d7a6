"""ogstyle: learn to rewrite translated-style text into original-style text
from comparable (non-parallel) corpora.

The package couples online pseudo-parallel pair mining with a supervised
translation objective and an unsupervised objective (target-style language
model loss plus semantic-similarity loss), and selects checkpoints with a
fully unsupervised validation criterion.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, MissingArtifactError, OgstyleError

__all__ = [
    "__version__",
    "OgstyleError",
    "ConfigError",
    "DataError",
    "MissingArtifactError",
]
