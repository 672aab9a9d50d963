"""streamtwin: per-user digital twins for video-streaming engagement.

Turns raw playback event logs into per-session feature records, fits a small
boosted-tree twin per user, distills each twin into a sensitivity vector,
trains a population engagement model on sensitivity-augmented rows, and
answers what-if questions about streaming parameters through a simulator and
an HTTP service.
"""

from .errors import ConfigurationError, DroppableSession, SchemaError, StreamTwinError

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "StreamTwinError",
    "ConfigurationError",
    "SchemaError",
    "DroppableSession",
]
