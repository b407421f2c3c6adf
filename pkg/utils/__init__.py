"""Shared helpers: artifact writers and acceptance statistics."""
