"""mmWave coverage simulator with reflecting-surface and repeater relay extenders."""

__version__ = "0.1.0"
