"""Smooth periodic Bloch frames, composite Wannier functions and their magnetic dressing."""
