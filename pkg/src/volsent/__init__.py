"""Volatility forecasting with GARCH, SVR and sentiment-fed LSTM models."""

__version__ = "0.1.0"
