"""Exact recovery from noisy pairwise difference measurements.

Channel families, divergence metrics, cut statistics of measurement graphs,
recovery thresholds, exact ML decoding and Monte Carlo validation.
"""

__version__ = "0.1.0"
