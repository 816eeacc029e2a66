"""Text-conditioned information routing for multivariate forecasting."""

__version__ = "0.1.0"
