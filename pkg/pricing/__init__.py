"""Estimators of G(t, x, y), its y-derivatives and option costs."""
