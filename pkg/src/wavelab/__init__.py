"""wavelab: pseudospectral solver and verification lab for small traveling waves
of Whitham-type nonlocal dispersive equations."""

__version__ = "0.1.0"
