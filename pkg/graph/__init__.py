"""Graph workflow orchestration for table reproduction."""

from .workflow import ReproState, TableReproduction

__all__ = ["TableReproduction", "ReproState"]
