"""Ground states of u = g_alpha * u^beta and numerical checks of their radial symmetry."""

__version__ = "0.1.0"
