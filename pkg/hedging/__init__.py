"""Leland hedging: strategy, accounting and convergence studies."""
