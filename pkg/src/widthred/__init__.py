"""Width-preserving reductions with machine-checkable certificates."""

__version__ = "0.1.0"
