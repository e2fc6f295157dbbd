"""Siting, simulation, pricing and price forecasting for EV fast-charging
infrastructure on radial distribution feeders."""

__version__ = "0.1.0"
