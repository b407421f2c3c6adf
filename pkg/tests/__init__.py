"""Test package for Nova backend."""
