"""American put pricing under jump diffusions with free-boundary diagnostics."""

__version__ = "0.1.0"
