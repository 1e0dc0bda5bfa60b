"""Augmented-system oracle and convergence analysis."""
