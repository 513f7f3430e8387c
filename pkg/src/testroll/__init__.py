"""Sample-size design for finite-population test-and-roll experiments."""

__version__ = "0.1.0"
