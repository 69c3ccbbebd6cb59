"""Direct position determination from unquantized and one-bit array data."""

__version__ = "0.1.0"
