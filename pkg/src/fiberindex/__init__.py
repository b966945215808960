"""Index pairings for families of pseudodifferential operators on a circle fiber."""

__version__ = "0.1.0"
