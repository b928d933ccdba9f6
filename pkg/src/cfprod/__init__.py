"""Metric theory of products of consecutive partial quotients."""
__version__ = "0.1.0"
