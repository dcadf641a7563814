"""Feedback and delayed-CSI coding schemes for X and interference channels.

Schemes run as linear protocols over a symbolic ledger, so their degrees of
freedom can be checked by exact slot counting, rank tests and rate slopes.
"""

__version__ = "0.1.0"
