"""Hardy-type correlations, relaxed hidden-variable bounds and LP oracles."""

__version__ = "0.1.0"
