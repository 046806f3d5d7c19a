"""Image-based plant wilting metrics: batch analysis, statistics, scoring."""

__version__ = "0.1.0"
