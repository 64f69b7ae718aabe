"""Best simultaneous approximations in R^3 and vectors with prescribed patterns."""

__version__ = "0.1.0"
