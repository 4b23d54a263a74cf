"""Segmentation-free white-matter hyperintensity detection for low-resolution slice stacks."""

__version__ = "0.1.0"
