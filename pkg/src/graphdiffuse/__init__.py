"""Discrete denoising diffusion toolkit for small categorical graphs."""

__version__ = "0.1.0"
