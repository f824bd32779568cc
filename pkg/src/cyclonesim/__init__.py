"""Soft-PLC runtime and digital twin for the Cyclone catalyst handler."""

__version__ = "0.1.0"
