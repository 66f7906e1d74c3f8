"""Convexification experiments in trees times Euclidean space."""

__version__ = "0.1.0"
