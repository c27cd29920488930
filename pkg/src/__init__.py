"""Core package for Bayesian-network face classification from block textures."""
