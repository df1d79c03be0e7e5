"""Free transport for bipartite graph planar algebras, computed on truncated word series."""

__version__ = "0.1.0"
