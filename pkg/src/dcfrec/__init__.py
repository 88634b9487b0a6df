"""dcfrec."""

from dcfrec import datasets


__version__ = "0.1.0"


__all__ = ["datasets"]
