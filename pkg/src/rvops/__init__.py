"""rvops: ground segment for a simulated planetary rover.

Subpackages cover geometry, the rover/terrain simulator, rock detection,
mapping, safety gating, the wire protocol, the ground pipeline, and the
operator-facing service. Heavy dependencies import lazily via submodules.
"""

__version__ = "0.1.0"
