"""Behavior-count malware images: PRS encoding, SMOTE/cGAN balancing, CNN detection."""

__version__ = "0.1.0"
