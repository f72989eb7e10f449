"""Variance-based global sensitivity analysis for total-effect indices."""
