"""Lattice vector quantization over q-ary truncated convolutional codes."""

__version__ = "0.1.0"
