"""ICA feature extraction and kernel-SVM classification for short texts."""

__version__ = "0.1.0"
