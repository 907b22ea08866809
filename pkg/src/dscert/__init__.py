"""Certified GCD-graph compression and Diophantine approximation harness."""

__version__ = "0.1.0"
