"""Battery co-optimization for demand-charge peak shaving and frequency regulation."""

__version__ = "0.1.0"
