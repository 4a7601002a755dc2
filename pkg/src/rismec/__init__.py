"""Power-minimizing edge offloading over frequency-selective RIS channels."""

__version__ = "0.1.0"
