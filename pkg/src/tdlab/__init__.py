"""Explicit vs implicit temporal-difference errors across tabular, linear and neural value functions."""

__version__ = "0.1.0"
