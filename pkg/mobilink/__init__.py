"""Social-link inference from check-in data, and defenses against it."""

__version__ = "0.1.0"
