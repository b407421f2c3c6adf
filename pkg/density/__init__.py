"""Density of the exponential functional via Brownian bridges."""
