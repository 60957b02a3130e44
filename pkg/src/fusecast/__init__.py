"""Signal-fused transformer forecasting on synthetic market data."""

__version__ = "0.1.0"
