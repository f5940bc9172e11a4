"""Iterative per-region algorithm selection for semantic segmentation.

A first selector picks one segmentation backend per image; a relational
model over detected objects then flags implausible object configurations,
and a second selector re-segments the offending regions with other backends.
"""

from __future__ import annotations

__version__ = "0.1.0"
