"""Serverless co-location simulator: schedulers, fingerprinting, attacks and metrics."""

__version__ = "0.1.0"
