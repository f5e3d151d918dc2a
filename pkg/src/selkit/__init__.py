"""Staged training-data compiler and offset-grounded scorer for span-level
information extraction (NER, relations, events, sentiment triplets/quads)."""

__version__ = "0.1.0"
