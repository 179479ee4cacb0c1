"""Ensemble mobile-cloud readout pipeline for seven-segment device screens."""

__version__ = "0.1.0"
