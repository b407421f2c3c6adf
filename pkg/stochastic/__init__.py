"""Seeding, grids, Wiener and asset paths, and the project exception hierarchy."""
