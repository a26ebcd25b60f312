"""Vendor success prediction from forum communication networks."""

__version__ = "0.1.0"
