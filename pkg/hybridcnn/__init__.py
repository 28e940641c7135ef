"""Hybrid three-branch CNN for normal/abnormal image classification."""

__version__ = "0.1.0"
