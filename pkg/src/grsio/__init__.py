"""Directional multiplier operators on periodic grids, with the supporting
Grassmannian rotation geometry, triadic tiling, wave-packet frames, and
tree-selection algorithms."""

__version__ = "0.1.0"
