"""High-order generalized Caputo derivatives and a fractional advection-diffusion solver."""

__version__ = "0.1.0"
