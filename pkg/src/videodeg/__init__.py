"""Randomized, shuffled video degradations with replayable provenance."""

__version__ = "0.1.0"
