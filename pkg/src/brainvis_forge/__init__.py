"""brainvis_forge: desk-scale EEG-to-image pipeline with verifiable numerics."""

__version__ = "0.1.0"
