"""Band gaps and high-energy eigenvalue asymptotics for periodic Schrödinger operators."""

__version__ = "0.1.0"
