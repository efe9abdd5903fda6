"""Retail feedback-loop simulator: recommenders retrained on the purchases they shape."""

__version__ = "0.1.0"
