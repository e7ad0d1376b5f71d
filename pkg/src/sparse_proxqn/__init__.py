"""Proximal quasi-Newton training for l1-regularized structured models."""

__version__ = "0.1.0"
