"""Reference driver that fine-tunes an encoder-decoder model on compiled
stage files with sequential weight carry-over, then dumps raw predictions."""

__version__ = "0.1.0"
