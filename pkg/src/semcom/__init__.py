"""Semantic image transmission simulator.

Splits fixed-camera sequences into periodically transmitted backgrounds and
per-frame semantic regions, pushes the encoded records through configurable
noisy channels, recomposes and reconstructs frames at the receiver, and
scores the result with full-reference quality metrics.
"""

__version__ = "0.1.0"

from .frame import Frame, abs_diff, load_frame, save_frame

__all__ = ["Frame", "abs_diff", "load_frame", "save_frame", "__version__"]
