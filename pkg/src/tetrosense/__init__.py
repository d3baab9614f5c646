"""Tetromino-binned image sensors: layouts, measurement operators, coherence
analysis and compressed-sensing reconstruction."""

__version__ = "0.1.0"
