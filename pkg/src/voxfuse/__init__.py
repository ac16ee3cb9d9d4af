"""Fusion and evaluation of 3D lesion segmentations.

Intersection stacking and agreement-window ensembling of binary masks,
super-region-wise composition, overlap metrics, lesion volume and weighted
tract lesion load.
"""
__version__ = "0.1.0"
