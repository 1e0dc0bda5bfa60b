"""Core value types, graph and matrix kernels, and configuration."""
